#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "tradescan/errors.hpp"
#include "tradescan/explain.hpp"
#include "tradescan/rng.hpp"
#include "tradescan/trendline.hpp"

using namespace tradescan;
using namespace tradescan::explain;

namespace {

FeatureMatrix random_matrix(std::size_t rows, std::size_t f, Rng& rng) {
  FeatureMatrix m;
  m.n_features = f;
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> r(f);
    for (auto& v : r) v = rng.uniform(-2, 2);
    m.push_row(r);
  }
  return m;
}

}  // namespace

TEST_CASE("Shapley values equal the permutation oracle") {
  Rng rng(1);
  const auto model = [](std::span<const double> z) {
    return std::sin(z[0]) * z[1] + z[2] * z[2] - 0.5 * z[0] * z[2] + (z[3] > 0 ? 1.0 : 0.0) * z[1];
  };
  const auto background = random_matrix(15, 4, rng);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> x(4);
    for (auto& v : x) v = rng.uniform(-2, 2);
    const auto e = shapley_values(model, x, background);
    const auto value = [&](unsigned mask) {
      double s = 0;
      std::vector<double> h(4);
      for (std::size_t b = 0; b < background.rows(); ++b) {
        for (int j = 0; j < 4; ++j) h[j] = (mask >> j & 1U) ? x[j] : background.row(b)[j];
        s += model(h);
      }
      return s / background.rows();
    };
    const auto phi = oracle::permutation_shapley(4, value);
    for (int j = 0; j < 4; ++j) CHECK(e.phi[j] == doctest::Approx(phi[j]).epsilon(1e-12));
    double total = e.baseline;
    for (double p : e.phi) total += p;
    CHECK(std::abs(total - model(x)) <= 1e-12);
  }
}

TEST_CASE("Shapley linear closed form and dummy feature") {
  Rng rng(2);
  const std::vector<double> w{1.5, -2.0, 0.0, 0.25};
  const auto model = [&](std::span<const double> z) {
    double s = 0.3;
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * z[j];
    return s;
  };
  const auto background = random_matrix(40, 4, rng);
  std::vector<double> mean(4, 0.0);
  for (std::size_t b = 0; b < background.rows(); ++b) {
    for (int j = 0; j < 4; ++j) mean[j] += background.row(b)[j] / background.rows();
  }
  const std::vector<double> x{0.7, -1.1, 3.0, 0.4};
  const auto e = shapley_values(model, x, background);
  for (int j = 0; j < 4; ++j) CHECK(e.phi[j] == doctest::Approx(w[j] * (x[j] - mean[j])).epsilon(1e-12));
  CHECK(e.phi[2] == 0.0);
}

TEST_CASE("Shapley refuses too many features or an empty background") {
  FeatureMatrix bg;
  bg.n_features = 13;
  bg.push_row(std::vector<double>(13, 0.0));
  const auto model = [](std::span<const double>) { return 0.0; };
  CHECK_THROWS_AS(shapley_values(model, std::vector<double>(13, 0.0), bg), ParameterError);
  FeatureMatrix empty;
  empty.n_features = 2;
  CHECK_THROWS_AS(shapley_values(model, std::vector<double>(2, 0.0), empty), ParameterError);
}

TEST_CASE("regression tree splits on the informative feature") {
  Rng rng(3);
  FeatureMatrix x;
  x.n_features = 3;
  std::vector<double> y;
  for (int i = 0; i < 200; ++i) {
    const double vague = rng.below(2);
    const double row[3] = {vague, rng.uniform(0, 6), rng.uniform(0, 6)};
    x.push_row(row);
    y.push_back(vague > 0.5 ? 0.9 : 0.1);
  }
  std::vector<std::size_t> all(200);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto tree = fit_tree(x, y, all, 6, 1);
  CHECK(tree.uses_feature(0));
  CHECK_FALSE(tree.uses_feature(1));
  CHECK_FALSE(tree.uses_feature(2));
  const double a[3] = {1, 3, 3};
  const double b[3] = {0, 3, 3};
  CHECK(tree.predict(a) == doctest::Approx(0.9));
  CHECK(tree.predict(b) == doctest::Approx(0.1));
  // Leaf values are training means: the tree reproduces the targets.
  for (std::size_t i = 0; i < 200; ++i) CHECK(tree.predict(x.row(i)) == doctest::Approx(y[i]));
}

TEST_CASE("surrogate forest fits, is deterministic and leaves a dummy feature unused") {
  Rng rng(4);
  FeatureMatrix x;
  x.n_features = 3;
  std::vector<double> y;
  for (int i = 0; i < 300; ++i) {
    const double row[3] = {static_cast<double>(rng.below(2)), rng.uniform(0, 6), 1.0};
    x.push_row(row);
    y.push_back(0.6 * row[0] + 0.05 * row[1]);
  }
  ForestParams p;
  p.seed = 9;
  const auto f1 = fit_surrogate_forest(x, y, p);
  const auto f2 = fit_surrogate_forest(x, y, p);
  CHECK(f1.trees.size() == 20);
  CHECK_FALSE(f1.uses_feature(2));
  double sse = 0, sst = 0, mean = 0;
  for (double v : y) mean += v / y.size();
  for (std::size_t i = 0; i < y.size(); ++i) {
    CHECK(f1.predict(x.row(i)) == f2.predict(x.row(i)));
    sse += std::pow(f1.predict(x.row(i)) - y[i], 2);
    sst += std::pow(y[i] - mean, 2);
  }
  CHECK(1 - sse / sst > 0.95);
  FeatureMatrix bg;
  bg.n_features = 3;
  for (std::size_t i = 0; i < 30; ++i) bg.push_row(x.row(i));
  const auto e = shapley_values(f1, x.row(100), bg);
  CHECK(e.phi[2] == 0.0);
  CHECK(std::abs(e.baseline + e.phi[0] + e.phi[1] + e.phi[2] - f1.predict(x.row(100))) <= 1e-12);
  CHECK_THROWS_AS(fit_surrogate_forest(bg, std::vector<double>(5, 0.0), p), ParameterError);
}

TEST_CASE("mean |phi| ranking and outputs") {
  std::vector<ShapExplanation> ex{{1, 0.2, 0.5, {0.3, -0.1, 0.1}}, {2, 0.2, 0.0, {-0.1, 0.2, -0.3}}};
  const std::vector<std::string> names{"is_vague", "log_value", "log_weight"};
  const auto ranking = mean_abs_shap_report(ex, names);
  REQUIRE(ranking.size() == 3);
  // 0.2, 0.15, 0.2: ties keep feature order.
  CHECK(ranking[0].feature == "is_vague");
  CHECK(ranking[1].feature == "log_weight");
  CHECK(ranking[2].feature == "log_value");
  CHECK(ranking[0].mean_abs_phi == doctest::Approx(0.2));
  std::ostringstream out;
  write_shap_values_csv(out, ex, names);
  CHECK(out.str().rfind("record_id,baseline,prediction,phi_is_vague,phi_log_value,phi_log_weight\n", 0) == 0);
  const auto json = shap_summary_json(ranking, 2, 100);
  CHECK(json.find("\"is_vague\"") != std::string::npos);
}

TEST_CASE("OLS recovers exact and noisy lines") {
  std::vector<Point2> pts;
  for (int i = 0; i < 10; ++i) pts.push_back({static_cast<double>(i), 2.0 + 1.5 * i});
  const auto fit = trendline::fit_ols(pts);
  CHECK(fit.slope == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.r_squared == doctest::Approx(1.0));
  CHECK(fit.n == 10);

  Rng rng(6);
  std::vector<Point2> noisy;
  for (int i = 0; i < 500; ++i) {
    const double x = rng.uniform(0, 5);
    noisy.push_back({x, 1 + 0.8 * x + rng.normal(0, 0.2)});
  }
  // Oracle: normal equations solved by Cramer's rule.
  double n = noisy.size(), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : noisy) {
    sx += p.x;
    sy += p.y;
    sxx += p.x * p.x;
    sxy += p.x * p.y;
  }
  const double det = n * sxx - sx * sx;
  const auto f = trendline::fit_ols(noisy);
  CHECK(f.slope == doctest::Approx((n * sxy - sx * sy) / det).epsilon(1e-10));
  CHECK(f.intercept == doctest::Approx((sy * sxx - sx * sxy) / det).epsilon(1e-10));

  CHECK_THROWS_AS(trendline::fit_ols(std::vector<Point2>{{1, 1}}), ParameterError);
  CHECK_THROWS_AS(trendline::fit_ols(std::vector<Point2>{{1, 1}, {1, 2}}), InputError);
  CHECK(trendline::fit_ols(std::vector<Point2>{{1, 3}, {2, 3}}).r_squared == 1.0);
}

TEST_CASE("high-risk membership and divergence report") {
  const auto codes = trendline::default_high_risk_codes();
  CHECK(trendline::is_high_risk("29037700", codes));
  CHECK(trendline::is_high_risk("382478", codes));
  CHECK_FALSE(trendline::is_high_risk("290371", codes));
  CHECK_FALSE(trendline::is_high_risk("2903", codes));

  std::vector<trendline::TrendRow> rows;
  for (int i = 0; i < 20; ++i) {
    rows.push_back({"290371", {static_cast<double>(i % 7), 1.0 * (i % 7)}});
    rows.push_back({"290377", {static_cast<double>(i % 5), 2.0 * (i % 5)}});
  }
  const auto rep = trendline::divergence_report(rows, codes);
  CHECK(rep.fit_highrisk.slope == doctest::Approx(2.0));
  CHECK(rep.fit_highrisk.n == 20);
  CHECK(rep.fit_all.n == 40);
  CHECK(rep.slope_divergence == doctest::Approx(rep.fit_highrisk.slope - rep.fit_all.slope));
  CHECK_FALSE(rep.small_high_risk_sample);
  REQUIRE(rep.markers.size() == 1);
  CHECK(rep.markers[0].hs_code == "290377");
  CHECK(rep.markers[0].n == 20);
  const auto json = trendline::trendlines_json(rep);
  CHECK(json.find("slope_divergence") != std::string::npos);
}

TEST_CASE("general population fit and divergence against it") {
  const auto codes = trendline::default_high_risk_codes();
  std::vector<trendline::TrendRow> rows;
  for (int i = 0; i < 20; ++i) {
    rows.push_back({"290371", {static_cast<double>(i % 7), 1.0 * (i % 7)}});
    rows.push_back({"290377", {static_cast<double>(i % 5), 2.0 * (i % 5)}});
  }
  const auto rep = trendline::divergence_report(rows, codes);
  REQUIRE(rep.fit_general.has_value());
  CHECK(rep.fit_general->n == 20);
  CHECK(rep.fit_general->slope == doctest::Approx(1.0));
  CHECK(rep.fit_general->population == trendline::Population::General);
  REQUIRE(rep.slope_divergence_vs_general.has_value());
  CHECK(*rep.slope_divergence_vs_general == doctest::Approx(1.0));
  const auto json = trendline::trendlines_json(rep);
  CHECK(json.find("\"General\"") != std::string::npos);

  std::vector<trendline::TrendRow> only_hr;
  for (int i = 0; i < 10; ++i) only_hr.push_back({"290377", {static_cast<double>(i), 3.0 * i + 1}});
  const auto all_hr = trendline::divergence_report(only_hr, codes);
  CHECK(all_hr.slope_divergence == 0.0);
  CHECK_FALSE(all_hr.fit_general.has_value());
  CHECK_FALSE(all_hr.slope_divergence_vs_general.has_value());
  CHECK(trendline::trendlines_json(all_hr).find("\"slope_divergence_vs_general\": null") != std::string::npos);
}

TEST_CASE("OLS residuals are orthogonal and the fit ignores row order") {
  Rng rng(61);
  std::vector<Point2> pts;
  for (int i = 0; i < 300; ++i) {
    const double x = rng.uniform(-3, 3);
    pts.push_back({x, -0.4 + 2.2 * x + rng.normal(0, 0.5)});
  }
  const auto fit = trendline::fit_ols(pts);
  double sum_r = 0, sum_rx = 0;
  for (const auto& p : pts) {
    const double r = p.y - (fit.intercept + fit.slope * p.x);
    sum_r += r;
    sum_rx += r * p.x;
  }
  CHECK(std::abs(sum_r) < 1e-9);
  CHECK(std::abs(sum_rx) < 1e-9);
  auto shuffled = pts;
  rng.shuffle(shuffled);
  const auto again = trendline::fit_ols(shuffled);
  CHECK(again.slope == doctest::Approx(fit.slope).epsilon(1e-12));
  CHECK(again.intercept == doctest::Approx(fit.intercept).epsilon(1e-12));
}
