#include "tradescan/price_anomaly.hpp"

#include <algorithm>

#include "tradescan/stats.hpp"

namespace tradescan::price_anomaly {

std::string_view to_string(Side side) { return side == Side::High ? "High" : "Low"; }

std::string_view to_string(Queue queue) {
  return queue == Queue::CustomsReview ? "CustomsReview" : "DataQualityReview";
}

std::vector<PricedRow> priced_rows(std::span<const TradeRecord> records,
                                   std::span<const features::FeatureRow> rows) {
  std::vector<PricedRow> out;
  for (std::size_t i = 0; i < records.size() && i < rows.size(); ++i) {
    if (rows[i].price_per_kg) out.push_back({records[i].record_id, records[i].hs_code, *rows[i].price_per_kg});
  }
  return out;
}

GroupPriceStats summarize(std::string hs_code, std::span<const double> prices, double multiplier) {
  std::vector<double> sorted(prices.begin(), prices.end());
  std::sort(sorted.begin(), sorted.end());
  GroupPriceStats s;
  s.hs_code = std::move(hs_code);
  s.n = sorted.size();
  s.q1 = quantile_sorted(sorted, 0.25);
  s.median = quantile_sorted(sorted, 0.5);
  s.q3 = quantile_sorted(sorted, 0.75);
  s.iqr = s.q3 - s.q1;
  s.lower_fence = s.q1 - multiplier * s.iqr;
  s.upper_fence = s.q3 + multiplier * s.iqr;
  return s;
}

StatsMap group_stats(std::span<const PricedRow> rows, double multiplier) {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& r : rows) groups[r.hs_code].push_back(r.price_per_kg);
  StatsMap out;
  for (auto& [code, prices] : groups) out.emplace(code, summarize(code, prices, multiplier));
  return out;
}

std::vector<PriceAnomaly> detect_price_outliers(std::span<const PricedRow> rows,
                                                const StatsMap& stats,
                                                std::size_t min_group_size) {
  std::vector<PriceAnomaly> out;
  for (const auto& r : rows) {
    const auto it = stats.find(r.hs_code);
    if (it == stats.end() || it->second.n < min_group_size) continue;
    const auto& s = it->second;
    if (r.price_per_kg > s.upper_fence) {
      out.push_back({r.record_id, r.hs_code, r.price_per_kg, Side::High, std::nullopt});
    } else if (r.price_per_kg < s.lower_fence) {
      out.push_back({r.record_id, r.hs_code, r.price_per_kg, Side::Low, std::nullopt});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const PriceAnomaly& a, const PriceAnomaly& b) { return a.record_id < b.record_id; });
  return out;
}

PriceAnomaly triage(PriceAnomaly anomaly, double net_wgt_kg) {
  anomaly.queue = net_wgt_kg < 1.0 ? Queue::DataQualityReview : Queue::CustomsReview;
  return anomaly;
}

}  // namespace tradescan::price_anomaly
