#include "tradescan/features.hpp"

#include <algorithm>
#include <cmath>

#include "tradescan/csv.hpp"
#include "tradescan/errors.hpp"

namespace tradescan::features {

VagueKeywordList::VagueKeywordList()
    : keywords_{"mixtures", "halogenated", "n.e.c.", "not elsewhere specified"} {}

VagueKeywordList::VagueKeywordList(std::vector<std::string> keywords) {
  if (keywords.empty()) throw ConfigError("vague keyword list is empty");
  for (auto& k : keywords) {
    std::string lowered = csv::to_lower_ascii(k);
    if (lowered.empty()) throw ConfigError("vague keyword list contains an empty keyword");
    if (std::find(keywords_.begin(), keywords_.end(), lowered) != keywords_.end()) {
      throw ConfigError("duplicate vague keyword '" + lowered + "'");
    }
    keywords_.push_back(std::move(lowered));
  }
}

bool flag_vague(std::string_view description, const VagueKeywordList& keywords) {
  const std::string lowered = csv::to_lower_ascii(description);
  return std::any_of(keywords.keywords().begin(), keywords.keywords().end(),
                     [&](const std::string& k) { return lowered.find(k) != std::string::npos; });
}

FeatureRow build_feature_row(const TradeRecord& record, const VagueKeywordList& keywords) {
  FeatureRow row;
  row.record_id = record.record_id;
  if (record.primary_value_usd > 0.0) row.log_value = std::log10(record.primary_value_usd);
  if (record.net_wgt_kg > 0.0) {
    row.log_weight = std::log10(record.net_wgt_kg);
    row.price_per_kg = record.primary_value_usd / record.net_wgt_kg;
  }
  row.is_vague = flag_vague(record.description, keywords);
  return row;
}

std::vector<FeatureRow> build_feature_rows(std::span<const TradeRecord> records,
                                           const VagueKeywordList& keywords) {
  std::vector<FeatureRow> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(build_feature_row(r, keywords));
  return rows;
}

}  // namespace tradescan::features
