#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tradescan/types.hpp"

namespace tradescan::mega_trade {

inline constexpr double kEulerGamma = 0.5772156649;

// Average unsuccessful-search path length in a binary search tree of n
// points: 2 H(n-1) - 2(n-1)/n, H(i) ~ ln(i) + gamma; c(1) = c(0) = 0.
double average_path_length(std::size_t n);

struct IsolationNode {
  // Internal when left >= 0.
  int left = -1;
  int right = -1;
  int feature = 0;          // 0 = x, 1 = y
  double split = 0.0;       // x[feature] < split goes left
  std::size_t size = 0;     // training points reaching an external node
};

struct IsolationTree {
  std::vector<IsolationNode> nodes;  // nodes[0] is the root
  int depth() const;
};

struct IsolationForestParams {
  int n_trees = 100;
  std::size_t subsample_size = 256;
  std::uint64_t seed = 0;
};

struct IsolationForestModel {
  int n_trees = 0;
  std::size_t subsample_size = 0;  // effective psi = min(requested, |points|)
  int height_limit = 0;            // ceil(log2 psi)
  std::uint64_t seed = 0;
  std::vector<IsolationTree> trees;
};

// Throws ParameterError when |points| < 2 or parameters are non-positive,
// InputError on a non-finite point.
IsolationForestModel fit_isolation_forest(std::span<const Point2> points,
                                          const IsolationForestParams& params);

// Mean adjusted path length E[h(x)] over the forest.
double expected_path_length(const IsolationForestModel& model, const Point2& point);

// 2^(-E[h(x)] / c(psi)), in (0, 1]. Throws InputError on a non-finite point.
double score(const IsolationForestModel& model, const Point2& point);

struct ScoredRow {
  RecordId record_id = 0;
  Point2 point;  // (log_value, log_weight)
  double primary_value_usd = 0.0;
  Period period;
  std::string reporter;
};

struct MegaTradeEvent {
  RecordId record_id = 0;
  double score = 0.0;
  Period period;
  std::string reporter;
  double primary_value_usd = 0.0;
};

// Exactly ceil(contamination * n) highest scores; ties by higher value, then
// lower record_id. Output in that rank order.
std::vector<MegaTradeEvent> detect_mega_trades(std::span<const ScoredRow> rows,
                                               const IsolationForestModel& model,
                                               double contamination);

struct MonthlyPoint {
  Period month;
  std::size_t count = 0;
  double total_value = 0.0;
};

struct SpikeReport {
  std::vector<MonthlyPoint> series;    // every month between first and last event
  std::vector<Period> flagged_months;  // total_value > median + 3 * 1.4826 * MAD
  double threshold = 0.0;
  // year -> reporter -> value; yearly_total[y] is the sum of the reporter entries.
  std::map<int, std::map<std::string, double>> yearly_by_reporter;
  std::map<int, double> yearly_total;
  std::map<int, std::size_t> yearly_count;
};

inline constexpr double kMadScale = 1.4826;
inline constexpr double kSpikeDeviations = 3.0;

SpikeReport temporal_spikes(std::span<const MegaTradeEvent> events);

}  // namespace tradescan::mega_trade
