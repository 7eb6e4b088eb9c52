#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tradescan/features.hpp"
#include "tradescan/types.hpp"

namespace tradescan::price_anomaly {

struct GroupPriceStats {
  std::string hs_code;
  std::size_t n = 0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double lower_fence = 0.0;
  double upper_fence = 0.0;
};

enum class Side { Low, High };
enum class Queue { DataQualityReview, CustomsReview };

std::string_view to_string(Side side);
std::string_view to_string(Queue queue);

struct PriceAnomaly {
  RecordId record_id = 0;
  std::string hs_code;
  double price_per_kg = 0.0;
  Side side = Side::High;
  std::optional<Queue> queue;
};

// One priced observation. Rows with an undefined price never enter a group.
struct PricedRow {
  RecordId record_id = 0;
  std::string hs_code;
  double price_per_kg = 0.0;
};

// Rows from records/features whose price_per_kg is defined, in input order.
std::vector<PricedRow> priced_rows(std::span<const TradeRecord> records,
                                   std::span<const features::FeatureRow> rows);

// Tukey summary of a single sorted-or-not sample.
GroupPriceStats summarize(std::string hs_code, std::span<const double> prices,
                          double multiplier = 1.5);

using StatsMap = std::map<std::string, GroupPriceStats>;

StatsMap group_stats(std::span<const PricedRow> rows, double multiplier = 1.5);

// Rows strictly outside their group's fences, for groups of at least
// min_group_size, ordered by record_id.
std::vector<PriceAnomaly> detect_price_outliers(std::span<const PricedRow> rows,
                                                const StatsMap& stats,
                                                std::size_t min_group_size = 4);

// DataQualityReview iff weight < 1 kg.
PriceAnomaly triage(PriceAnomaly anomaly, double net_wgt_kg);

}  // namespace tradescan::price_anomaly
