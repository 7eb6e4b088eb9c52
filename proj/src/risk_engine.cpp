#include "tradescan/risk_engine.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "tradescan/csv.hpp"
#include "tradescan/errors.hpp"

namespace tradescan::risk_engine {

double price_score(double price_per_kg, const price_anomaly::GroupPriceStats& stats) {
  const double deviation = std::abs(price_per_kg - stats.median);
  if (deviation == 0.0) return 0.0;
  if (stats.iqr <= 0.0) return 1.0;
  return std::min(1.0, deviation / (kPriceSaturationIqr * stats.iqr));
}

ValueRanker::ValueRanker(std::span<const double> all_values)
    : sorted_(all_values.begin(), all_values.end()) {
  std::sort(sorted_.begin(), sorted_.end());
}

double ValueRanker::score(double value) const {
  const std::size_t n = sorted_.size();
  if (n < 2) return 0.5;
  const auto lo = std::lower_bound(sorted_.begin(), sorted_.end(), value);
  const auto hi = std::upper_bound(lo, sorted_.end(), value);
  const double below = static_cast<double>(lo - sorted_.begin());
  const double equal = static_cast<double>(hi - lo);
  const double rank = (below + 0.5 * equal - 0.5) / static_cast<double>(n - 1);
  return std::clamp(rank, 0.0, 1.0);
}

double value_score(double value, std::span<const double> all_values) {
  return ValueRanker(all_values).score(value);
}

double composite_score(double price_score, double value_score) {
  if (!(price_score >= 0.0 && price_score <= 1.0) || !(value_score >= 0.0 && value_score <= 1.0)) {
    throw ParameterError("composite score inputs must lie in [0, 1]");
  }
  return kPriceWeight * price_score + kValueWeight * value_score;
}

std::vector<std::optional<RiskScore>> score_records(std::span<const TradeRecord> records,
                                                    std::span<const features::FeatureRow> rows,
                                                    const price_anomaly::StatsMap& stats) {
  std::vector<double> values;
  values.reserve(records.size());
  for (const auto& r : records) values.push_back(r.primary_value_usd);
  const ValueRanker ranker(values);

  std::vector<std::optional<RiskScore>> out(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!rows[i].price_per_kg) continue;
    const auto it = stats.find(records[i].hs_code);
    if (it == stats.end()) continue;
    RiskScore s;
    s.record_id = records[i].record_id;
    s.price_score = price_score(*rows[i].price_per_kg, it->second);
    s.value_score = ranker.score(records[i].primary_value_usd);
    s.composite = composite_score(s.price_score, s.value_score);
    out[i] = s;
  }
  return out;
}

bool case_order(const CaseFileEntry& a, const CaseFileEntry& b) {
  if (a.composite != b.composite) return a.composite > b.composite;
  if (a.primary_value_usd != b.primary_value_usd) return a.primary_value_usd > b.primary_value_usd;
  return a.record_id < b.record_id;
}

std::vector<CaseFileEntry> build_case_file(std::span<const price_anomaly::PriceAnomaly> anomalies,
                                           const CaseInputs& inputs) {
  std::vector<CaseFileEntry> entries;
  for (const auto& a : anomalies) {
    if (a.queue != price_anomaly::Queue::CustomsReview) continue;
    const auto i = static_cast<std::size_t>(a.record_id);
    const auto& rec = inputs.records[i];
    const auto& row = inputs.rows[i];
    const auto& score = inputs.scores[i];
    if (!score || !row.price_per_kg) continue;

    CaseFileEntry e;
    e.record_id = rec.record_id;
    e.period = rec.period;
    e.reporter = rec.reporter;
    e.partner = rec.partner;
    e.hs_code = rec.hs_code;
    e.description = rec.description;
    e.primary_value_usd = rec.primary_value_usd;
    e.net_wgt_kg = rec.net_wgt_kg;
    e.price_per_kg = *row.price_per_kg;
    if (i < inputs.cluster_ids.size()) e.cluster_id = inputs.cluster_ids[i];
    e.is_vague = row.is_vague;
    e.price_outlier_side = a.side;
    e.mega_trade = i < inputs.mega_trade.size() && inputs.mega_trade[i];
    e.price_score = score->price_score;
    e.value_score = score->value_score;
    e.composite = score->composite;
    e.queue = *a.queue;
    e.highest_priority = row.is_vague;
    entries.push_back(std::move(e));
  }
  std::sort(entries.begin(), entries.end(), case_order);
  return entries;
}

CaseFileSummary summarize(std::span<const CaseFileEntry> entries,
                          std::span<const price_anomaly::PriceAnomaly> anomalies) {
  CaseFileSummary s;
  s.count = entries.size();
  for (const auto& e : entries) {
    s.total_value_usd += e.primary_value_usd;
    if (e.highest_priority) ++s.highest_priority;
  }
  for (const auto& a : anomalies) {
    if (a.queue == price_anomaly::Queue::CustomsReview) ++s.customs_review;
    else if (a.queue == price_anomaly::Queue::DataQualityReview) ++s.data_quality_review;
  }
  return s;
}

void write_case_file_csv(std::ostream& out, std::span<const CaseFileEntry> entries) {
  csv::write_row(out, {"record_id", "period", "reporter", "partner", "hs_code", "description",
                       "primary_value_usd", "net_wgt_kg", "price_per_kg", "cluster_id", "is_vague",
                       "price_outlier_side", "mega_trade", "price_score", "value_score", "composite",
                       "queue", "highest_priority"});
  for (const auto& e : entries) {
    csv::write_row(out, {std::to_string(e.record_id), e.period.to_string(), e.reporter, e.partner,
                         e.hs_code, e.description, csv::format_double(e.primary_value_usd),
                         csv::format_double(e.net_wgt_kg), csv::format_double(e.price_per_kg),
                         e.cluster_id ? std::to_string(*e.cluster_id) : std::string(),
                         e.is_vague ? "true" : "false",
                         std::string(price_anomaly::to_string(e.price_outlier_side)),
                         e.mega_trade ? "true" : "false", csv::format_double(e.price_score),
                         csv::format_double(e.value_score), csv::format_double(e.composite),
                         std::string(price_anomaly::to_string(e.queue)),
                         e.highest_priority ? "true" : "false"});
  }
}

std::string case_file_summary_json(const CaseFileSummary& summary) {
  nlohmann::ordered_json j;
  j["count"] = summary.count;
  j["total_value_usd"] = summary.total_value_usd;
  j["total_value_usd_text"] = csv::format_fixed2(summary.total_value_usd);
  j["by_queue"] = {{"CustomsReview", summary.customs_review},
                   {"DataQualityReview", summary.data_quality_review}};
  j["highest_priority"] = summary.highest_priority;
  return j.dump(2) + "\n";
}

}  // namespace tradescan::risk_engine
