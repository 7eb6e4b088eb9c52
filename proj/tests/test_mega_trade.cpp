#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "tradescan/errors.hpp"
#include "tradescan/mega_trade.hpp"
#include "tradescan/rng.hpp"

using namespace tradescan;
using namespace tradescan::mega_trade;

namespace {

std::vector<Point2> inliers(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point2> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({rng.normal(), rng.normal()});
  return pts;
}

// Depth of the external node that `p` reaches, by walking the tree.
int leaf_depth(const IsolationTree& tree, const Point2& p, std::size_t* size) {
  int node = 0;
  int depth = 0;
  while (tree.nodes[node].left >= 0) {
    const double v = tree.nodes[node].feature == 0 ? p.x : p.y;
    node = v < tree.nodes[node].split ? tree.nodes[node].left : tree.nodes[node].right;
    ++depth;
  }
  *size = tree.nodes[node].size;
  return depth;
}

}  // namespace

TEST_CASE("average path length normalizer") {
  CHECK(average_path_length(0) == 0.0);
  CHECK(average_path_length(1) == 0.0);
  CHECK(average_path_length(2) == doctest::Approx(0.15443132980).epsilon(1e-9));
  // 2 (ln(n-1) + gamma) - 2 (n-1)/n at n = 256
  CHECK(average_path_length(256) ==
        doctest::Approx(2 * (std::log(255.0) + 0.5772156649) - 2 * 255.0 / 256.0).epsilon(1e-12));
}

TEST_CASE("forest structure") {
  const auto pts = inliers(1000, 1);
  const auto model = fit_isolation_forest(pts, {50, 256, 9});
  CHECK(model.trees.size() == 50);
  CHECK(model.subsample_size == 256);
  CHECK(model.height_limit == 8);
  for (const auto& t : model.trees) {
    CHECK(t.depth() <= 8);
    // Every training point lands in some leaf; leaf sizes sum to psi.
    std::size_t total = 0;
    for (const auto& node : t.nodes) {
      if (node.left < 0) total += node.size;
    }
    CHECK(total == 256);
  }
  const auto small = fit_isolation_forest(std::span(pts.data(), 10), {5, 256, 9});
  CHECK(small.subsample_size == 10);
  CHECK(small.height_limit == 4);
}

TEST_CASE("expected path length equals the tree-walk oracle") {
  const auto pts = inliers(300, 2);
  const auto model = fit_isolation_forest(pts, {20, 64, 4});
  const std::vector<Point2> probes{{0, 0}, {3, -3}, {10, 10}, {-0.5, 1.2}};
  for (const auto& p : probes) {
    double sum = 0;
    for (const auto& t : model.trees) {
      std::size_t size = 0;
      sum += leaf_depth(t, p, &size) + average_path_length(size);
    }
    const double eh = sum / model.trees.size();
    CHECK(expected_path_length(model, p) == doctest::Approx(eh).epsilon(1e-12));
    CHECK(score(model, p) == doctest::Approx(std::pow(2.0, -eh / average_path_length(64))).epsilon(1e-12));
  }
}

TEST_CASE("outliers score higher than the bulk") {
  auto pts = inliers(1000, 3);
  pts.push_back({8, 8});
  const auto model = fit_isolation_forest(pts, {100, 256, 5});
  CHECK(score(model, {8, 8}) > 0.6);
  CHECK(score(model, {0, 0}) < 0.5);
}

TEST_CASE("fitting and scoring are seed-deterministic") {
  const auto pts = inliers(500, 6);
  const auto a = fit_isolation_forest(pts, {30, 128, 77});
  const auto b = fit_isolation_forest(pts, {30, 128, 77});
  for (const auto& p : pts) CHECK(score(a, p) == score(b, p));
}

TEST_CASE("invalid parameters") {
  const auto pts = inliers(10, 1);
  CHECK_THROWS_AS(fit_isolation_forest(std::span(pts.data(), 1), {10, 8, 0}), ParameterError);
  CHECK_THROWS_AS(fit_isolation_forest(pts, {0, 8, 0}), ParameterError);
  auto bad = pts;
  bad[3].y = INFINITY;
  CHECK_THROWS_AS(fit_isolation_forest(bad, {10, 8, 0}), InputError);
  const auto model = fit_isolation_forest(pts, {10, 8, 0});
  std::vector<ScoredRow> rows;
  CHECK_THROWS_AS(detect_mega_trades(rows, model, 0.0), ParameterError);
  CHECK_THROWS_AS(detect_mega_trades(rows, model, 0.5), ParameterError);
}

TEST_CASE("detect_mega_trades takes ceil(c n) in rank order") {
  const auto pts = inliers(1000, 8);
  std::vector<ScoredRow> rows;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    rows.push_back({static_cast<RecordId>(i), pts[i], 100.0 + i, {2021, 1 + static_cast<int>(i % 12)}, "R"});
  }
  const auto model = fit_isolation_forest(pts, {100, 256, 3});
  const auto events = detect_mega_trades(rows, model, 0.013);
  REQUIRE(events.size() == 13);
  // Oracle: full sort of every score.
  std::vector<std::pair<double, RecordId>> all;
  for (const auto& r : rows) all.push_back({score(model, r.point), r.record_id});
  std::sort(all.begin(), all.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    const double va = rows[a.second].primary_value_usd, vb = rows[b.second].primary_value_usd;
    if (va != vb) return va > vb;
    return a.second < b.second;
  });
  for (std::size_t i = 0; i < events.size(); ++i) CHECK(events[i].record_id == all[i].second);
  CHECK(detect_mega_trades(rows, model, 0.01).size() == 10);
}

TEST_CASE("monthly spike detection with MAD threshold") {
  std::vector<MegaTradeEvent> events;
  // One event per month for 2020-01..2021-12, a burst in 2021-02.
  for (int m = 0; m < 24; ++m) {
    const Period p = Period::from_ordinal(2020 * 12 + m);
    events.push_back({m, 0.7, p, m % 2 ? "USA" : "China", 100.0 + m});
  }
  for (int i = 0; i < 5; ++i) events.push_back({100 + i, 0.9, {2021, 2}, "USA", 5000.0});
  const auto report = temporal_spikes(events);
  REQUIRE(report.series.size() == 24);
  REQUIRE(report.flagged_months.size() == 1);
  CHECK(report.flagged_months[0] == Period{2021, 2});
  double yearly_sum = 0;
  for (const auto& [year, by_rep] : report.yearly_by_reporter) {
    double s = 0;
    for (const auto& [rep, v] : by_rep) s += v;
    CHECK(s == doctest::Approx(report.yearly_total.at(year)));
    yearly_sum += s;
  }
  double all = 0;
  for (const auto& e : events) all += e.primary_value_usd;
  CHECK(yearly_sum == doctest::Approx(all));
}

TEST_CASE("spike series fills empty months with zero") {
  std::vector<MegaTradeEvent> events{{0, 0.7, {2020, 1}, "A", 10}, {1, 0.7, {2020, 4}, "A", 10}};
  const auto report = temporal_spikes(events);
  REQUIRE(report.series.size() == 4);
  CHECK(report.series[1].count == 0);
  CHECK(report.series[1].total_value == 0.0);
  CHECK(temporal_spikes({}).series.empty());
}
