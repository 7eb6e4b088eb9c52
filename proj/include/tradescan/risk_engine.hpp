#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tradescan/features.hpp"
#include "tradescan/price_anomaly.hpp"
#include "tradescan/types.hpp"

namespace tradescan::risk_engine {

inline constexpr double kPriceWeight = 0.7;
inline constexpr double kValueWeight = 0.3;
// Deviation from the group median, in IQRs, at which price_score saturates.
inline constexpr double kPriceSaturationIqr = 3.0;

struct RiskScore {
  RecordId record_id = 0;
  double price_score = 0.0;
  double value_score = 0.0;
  double composite = 0.0;
};

// min(1, |price - median| / (3 iqr)); 0/1 step when iqr == 0.
double price_score(double price_per_kg, const price_anomaly::GroupPriceStats& stats);

// Mid-rank percentile of primary values, precomputed once per dataset.
class ValueRanker {
 public:
  explicit ValueRanker(std::span<const double> all_values);
  // (below + 0.5 * equal - 0.5) / (n - 1), clamped; 0.5 when n < 2.
  double score(double value) const;

 private:
  std::vector<double> sorted_;
};

double value_score(double value, std::span<const double> all_values);

// 0.7 p + 0.3 v. Throws ParameterError unless both lie in [0, 1].
double composite_score(double price_score, double value_score);

// Scores every record with a defined price and group statistics; indexed
// like `records`, nullopt where no score exists.
std::vector<std::optional<RiskScore>> score_records(std::span<const TradeRecord> records,
                                                    std::span<const features::FeatureRow> rows,
                                                    const price_anomaly::StatsMap& stats);

struct CaseFileEntry {
  RecordId record_id = 0;
  Period period;
  std::string reporter;
  std::string partner;
  std::string hs_code;
  std::string description;
  double primary_value_usd = 0.0;
  double net_wgt_kg = 0.0;
  double price_per_kg = 0.0;
  std::optional<int> cluster_id;
  bool is_vague = false;
  price_anomaly::Side price_outlier_side = price_anomaly::Side::High;
  bool mega_trade = false;
  double price_score = 0.0;
  double value_score = 0.0;
  double composite = 0.0;
  price_anomaly::Queue queue = price_anomaly::Queue::CustomsReview;
  // Price anomaly with a vague description.
  bool highest_priority = false;
};

struct CaseFileSummary {
  std::size_t count = 0;
  double total_value_usd = 0.0;
  std::size_t customs_review = 0;
  std::size_t data_quality_review = 0;
  std::size_t highest_priority = 0;
};

// Everything build_case_file needs, indexed by record position (record_id
// equals position in the parsed record list).
struct CaseInputs {
  std::span<const TradeRecord> records;
  std::span<const features::FeatureRow> rows;
  std::span<const std::optional<RiskScore>> scores;
  std::span<const std::optional<int>> cluster_ids;
  std::span<const std::uint8_t> mega_trade;  // 0 or 1
};

// CustomsReview anomalies only, ordered by composite desc, value desc, record_id asc.
std::vector<CaseFileEntry> build_case_file(std::span<const price_anomaly::PriceAnomaly> anomalies,
                                           const CaseInputs& inputs);

bool case_order(const CaseFileEntry& a, const CaseFileEntry& b);

CaseFileSummary summarize(std::span<const CaseFileEntry> entries,
                          std::span<const price_anomaly::PriceAnomaly> anomalies);

void write_case_file_csv(std::ostream& out, std::span<const CaseFileEntry> entries);

// JSON text with count, total_value_usd, total_value_usd_text and queue counts.
std::string case_file_summary_json(const CaseFileSummary& summary);

}  // namespace tradescan::risk_engine
