#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tradescan/types.hpp"

namespace tradescan::features {

// Lowercase keywords whose presence marks a description as vague.
class VagueKeywordList {
 public:
  // Default: mixtures, halogenated, n.e.c., not elsewhere specified.
  VagueKeywordList();
  // Lowercases the input; throws ConfigError if empty or duplicated.
  explicit VagueKeywordList(std::vector<std::string> keywords);

  const std::vector<std::string>& keywords() const { return keywords_; }

 private:
  std::vector<std::string> keywords_;
};

struct FeatureRow {
  RecordId record_id = 0;
  std::optional<double> log_value;     // log10(value), value > 0
  std::optional<double> log_weight;    // log10(weight), weight > 0
  std::optional<double> price_per_kg;  // value / weight, weight > 0
  bool is_vague = false;

  bool cluster_eligible() const { return log_value.has_value() && log_weight.has_value(); }
  // (log_weight, log_value); only valid when cluster_eligible().
  Point2 log_point() const { return {*log_weight, *log_value}; }
};

// Case-insensitive substring match against any keyword.
bool flag_vague(std::string_view description, const VagueKeywordList& keywords);

FeatureRow build_feature_row(const TradeRecord& record, const VagueKeywordList& keywords);

std::vector<FeatureRow> build_feature_rows(std::span<const TradeRecord> records,
                                           const VagueKeywordList& keywords);

}  // namespace tradescan::features
