#include "tradescan/mega_trade.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tradescan/errors.hpp"
#include "tradescan/rng.hpp"
#include "tradescan/stats.hpp"

namespace tradescan::mega_trade {
namespace {

double coord(const Point2& p, int feature) { return feature == 0 ? p.x : p.y; }

bool finite(const Point2& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

class TreeBuilder {
 public:
  TreeBuilder(std::vector<Point2> sample, int height_limit, Rng& rng)
      : sample_(std::move(sample)), height_limit_(height_limit), rng_(rng) {}

  IsolationTree build() {
    tree_.nodes.clear();
    grow(0, sample_.size(), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::size_t begin, std::size_t end, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    const std::size_t size = end - begin;
    tree_.nodes[id].size = size;
    if (depth >= height_limit_ || size <= 1) return id;

    double lo[2];
    double hi[2];
    for (int f = 0; f < 2; ++f) {
      lo[f] = hi[f] = coord(sample_[begin], f);
      for (std::size_t i = begin + 1; i < end; ++i) {
        lo[f] = std::min(lo[f], coord(sample_[i], f));
        hi[f] = std::max(hi[f], coord(sample_[i], f));
      }
    }
    int candidates[2];
    int n_candidates = 0;
    for (int f = 0; f < 2; ++f) {
      if (hi[f] > lo[f]) candidates[n_candidates++] = f;
    }
    if (n_candidates == 0) return id;  // all points coincide

    const int feature = candidates[rng_.below(static_cast<std::uint64_t>(n_candidates))];
    const double split = rng_.uniform(lo[feature], hi[feature]);
    const auto mid = std::partition(sample_.begin() + static_cast<std::ptrdiff_t>(begin),
                                    sample_.begin() + static_cast<std::ptrdiff_t>(end),
                                    [&](const Point2& p) { return coord(p, feature) < split; });
    const auto split_at = static_cast<std::size_t>(mid - sample_.begin());

    tree_.nodes[id].feature = feature;
    tree_.nodes[id].split = split;
    const int left = grow(begin, split_at, depth + 1);
    const int right = grow(split_at, end, depth + 1);
    tree_.nodes[id].left = left;
    tree_.nodes[id].right = right;
    return id;
  }

  std::vector<Point2> sample_;
  int height_limit_;
  Rng& rng_;
  IsolationTree tree_;
};

int depth_below(const IsolationTree& tree, int node) {
  const auto& n = tree.nodes[static_cast<std::size_t>(node)];
  if (n.left < 0) return 0;
  return 1 + std::max(depth_below(tree, n.left), depth_below(tree, n.right));
}

double path_length(const IsolationTree& tree, const Point2& p) {
  int node = 0;
  int depth = 0;
  while (tree.nodes[static_cast<std::size_t>(node)].left >= 0) {
    const auto& n = tree.nodes[static_cast<std::size_t>(node)];
    node = coord(p, n.feature) < n.split ? n.left : n.right;
    ++depth;
  }
  return depth + average_path_length(tree.nodes[static_cast<std::size_t>(node)].size);
}

}  // namespace

double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  const double nm1 = static_cast<double>(n - 1);
  const double harmonic = std::log(nm1) + kEulerGamma;
  return 2.0 * harmonic - 2.0 * nm1 / static_cast<double>(n);
}

int IsolationTree::depth() const { return nodes.empty() ? 0 : depth_below(*this, 0); }

IsolationForestModel fit_isolation_forest(std::span<const Point2> points,
                                          const IsolationForestParams& params) {
  if (points.size() < 2) throw ParameterError("isolation forest needs at least 2 points");
  if (params.n_trees < 1) throw ParameterError("n_trees must be at least 1");
  if (params.subsample_size < 2) throw ParameterError("subsample size must be at least 2");
  for (const auto& p : points) {
    if (!finite(p)) throw InputError("isolation forest input contains a non-finite point");
  }

  IsolationForestModel model;
  model.n_trees = params.n_trees;
  model.seed = params.seed;
  model.subsample_size = std::min(params.subsample_size, points.size());
  model.height_limit =
      static_cast<int>(std::ceil(std::log2(static_cast<double>(model.subsample_size))));
  model.trees.reserve(static_cast<std::size_t>(params.n_trees));

  std::vector<std::size_t> index(points.size());
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(t)));
    std::iota(index.begin(), index.end(), std::size_t{0});
    // Partial Fisher-Yates: the first psi slots become the subsample.
    std::vector<Point2> sample;
    sample.reserve(model.subsample_size);
    for (std::size_t i = 0; i < model.subsample_size; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(index.size() - i));
      std::swap(index[i], index[j]);
      sample.push_back(points[index[i]]);
    }
    model.trees.push_back(TreeBuilder(std::move(sample), model.height_limit, rng).build());
  }
  return model;
}

double expected_path_length(const IsolationForestModel& model, const Point2& point) {
  if (!finite(point)) throw InputError("cannot score a non-finite point");
  if (model.trees.empty()) throw ParameterError("isolation forest is not fitted");
  double total = 0.0;
  for (const auto& tree : model.trees) total += path_length(tree, point);
  return total / static_cast<double>(model.trees.size());
}

double score(const IsolationForestModel& model, const Point2& point) {
  const double eh = expected_path_length(model, point);
  const double c = average_path_length(model.subsample_size);
  return std::exp2(-eh / c);
}

std::vector<MegaTradeEvent> detect_mega_trades(std::span<const ScoredRow> rows,
                                               const IsolationForestModel& model,
                                               double contamination) {
  if (!(contamination > 0.0 && contamination < 0.5)) {
    throw ParameterError("contamination must lie in (0, 0.5)");
  }
  std::vector<MegaTradeEvent> events;
  events.reserve(rows.size());
  for (const auto& r : rows) {
    events.push_back({r.record_id, score(model, r.point), r.period, r.reporter, r.primary_value_usd});
  }
  std::sort(events.begin(), events.end(), [](const MegaTradeEvent& a, const MegaTradeEvent& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.primary_value_usd != b.primary_value_usd) return a.primary_value_usd > b.primary_value_usd;
    return a.record_id < b.record_id;
  });
  // The small slack keeps products like 0.01 * 1000 from rounding up to 11.
  const auto take = static_cast<std::size_t>(
      std::ceil(contamination * static_cast<double>(rows.size()) - 1e-9));
  events.resize(std::min(take, events.size()));
  return events;
}

SpikeReport temporal_spikes(std::span<const MegaTradeEvent> events) {
  SpikeReport report;
  std::map<int, MonthlyPoint> by_month;
  for (const auto& e : events) {
    report.yearly_by_reporter[e.period.year][e.reporter] += e.primary_value_usd;
    ++report.yearly_count[e.period.year];
    if (!e.period.has_month()) continue;
    auto& m = by_month[e.period.ordinal()];
    m.month = e.period;
    ++m.count;
    m.total_value += e.primary_value_usd;
  }
  for (const auto& [year, reporters] : report.yearly_by_reporter) {
    double total = 0.0;
    for (const auto& [name, value] : reporters) total += value;
    report.yearly_total[year] = total;
  }
  if (by_month.empty()) return report;

  const int first = by_month.begin()->first;
  const int last = by_month.rbegin()->first;
  for (int o = first; o <= last; ++o) {
    auto it = by_month.find(o);
    report.series.push_back(it != by_month.end() ? it->second
                                                 : MonthlyPoint{Period::from_ordinal(o), 0, 0.0});
  }
  std::vector<double> values;
  values.reserve(report.series.size());
  for (const auto& m : report.series) values.push_back(m.total_value);
  report.threshold = median(values) + kSpikeDeviations * kMadScale * median_abs_deviation(values);
  for (const auto& m : report.series) {
    if (m.total_value > report.threshold) report.flagged_months.push_back(m.month);
  }
  return report;
}

}  // namespace tradescan::mega_trade
