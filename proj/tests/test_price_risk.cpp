#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "tradescan/errors.hpp"
#include "tradescan/price_anomaly.hpp"
#include "tradescan/risk_engine.hpp"
#include "tradescan/rng.hpp"

using namespace tradescan;
using price_anomaly::PricedRow;
using price_anomaly::Queue;
using price_anomaly::Side;

namespace {

std::vector<PricedRow> random_rows(std::size_t n, int groups, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<PricedRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    const int g = static_cast<int>(rng.below(static_cast<std::uint64_t>(groups)));
    // Heavy tail plus a few exact duplicates to exercise ties.
    double price = std::exp(rng.normal(g * 0.1, 1.0));
    if (rng.below(10) == 0) price = 1.0;
    rows.push_back({static_cast<RecordId>(i), "29" + std::to_string(1000 + g), price});
  }
  return rows;
}

}  // namespace

TEST_CASE("Tukey summary of a known sample") {
  const std::vector<double> prices{1, 2, 3, 4, 5, 6, 7, 100};
  const auto s = price_anomaly::summarize("2903", prices);
  CHECK(s.n == 8);
  CHECK(s.q1 == doctest::Approx(2.75));
  CHECK(s.median == doctest::Approx(4.5));
  CHECK(s.q3 == doctest::Approx(6.25));
  CHECK(s.iqr == doctest::Approx(3.5));
  CHECK(s.lower_fence == doctest::Approx(-2.5));
  CHECK(s.upper_fence == doctest::Approx(11.5));
}

TEST_CASE("outlier flags equal the sorted-quantile oracle") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto rows = random_rows(2000, 12, seed);
    for (double m : {1.0, 1.5, 3.0}) {
      const auto stats = price_anomaly::group_stats(rows, m);
      const auto flagged = price_anomaly::detect_price_outliers(rows, stats, 4);
      std::set<long long> got;
      for (const auto& a : flagged) got.insert(a.record_id);
      std::vector<oracle::PricedItem> items;
      for (const auto& r : rows) items.push_back({r.record_id, r.hs_code, r.price_per_kg});
      CHECK(got == oracle::iqr_flags(items, m, 4));
      CHECK(std::is_sorted(flagged.begin(), flagged.end(),
                           [](const auto& a, const auto& b) { return a.record_id < b.record_id; }));
    }
  }
}

TEST_CASE("fences use strict inequality and small groups are skipped") {
  std::vector<PricedRow> rows;
  // q1 = 1, q3 = 3, iqr = 2, fences [-2, 6]; 6 sits on the fence.
  const double prices[] = {1, 1, 3, 3, 6};
  for (int i = 0; i < 5; ++i) rows.push_back({i, "11", prices[i]});
  rows.push_back({5, "22", 1});
  rows.push_back({6, "22", 1000});
  const auto stats = price_anomaly::group_stats(rows);
  CHECK(stats.at("11").upper_fence == doctest::Approx(6.0));
  CHECK(price_anomaly::detect_price_outliers(rows, stats, 4).empty());
  rows[4].price_per_kg = 6.0001;
  const auto again = price_anomaly::group_stats(rows);
  const auto flagged = price_anomaly::detect_price_outliers(rows, again, 4);
  REQUIRE(flagged.size() == 1);
  CHECK(flagged[0].record_id == 4);
  CHECK(flagged[0].side == Side::High);
}

TEST_CASE("zero-IQR group flags any deviation") {
  std::vector<PricedRow> rows;
  for (int i = 0; i < 6; ++i) rows.push_back({i, "33", 5.0});
  rows.push_back({6, "33", 4.0});
  const auto flagged = price_anomaly::detect_price_outliers(rows, price_anomaly::group_stats(rows), 4);
  REQUIRE(flagged.size() == 1);
  CHECK(flagged[0].side == Side::Low);
}

TEST_CASE("triage routes sub-kilogram weights to data quality") {
  price_anomaly::PriceAnomaly a{1, "2903", 1e6, Side::High, std::nullopt};
  CHECK(*price_anomaly::triage(a, 0.5).queue == Queue::DataQualityReview);
  CHECK(*price_anomaly::triage(a, 1.0).queue == Queue::CustomsReview);
  CHECK(*price_anomaly::triage(a, 250.0).queue == Queue::CustomsReview);
}

TEST_CASE("price score saturates at three IQRs") {
  price_anomaly::GroupPriceStats s;
  s.median = 10;
  s.iqr = 2;
  CHECK(risk_engine::price_score(10, s) == 0.0);
  CHECK(risk_engine::price_score(13, s) == doctest::Approx(0.5));
  CHECK(risk_engine::price_score(7, s) == doctest::Approx(0.5));
  CHECK(risk_engine::price_score(16, s) == 1.0);
  CHECK(risk_engine::price_score(1000, s) == 1.0);
  s.iqr = 0;
  CHECK(risk_engine::price_score(10, s) == 0.0);
  CHECK(risk_engine::price_score(10.5, s) == 1.0);
}

TEST_CASE("value score is the mid-rank percentile") {
  const std::vector<double> v{10, 20, 20, 40};
  CHECK(risk_engine::value_score(10, v) == 0.0);
  CHECK(risk_engine::value_score(40, v) == 1.0);
  CHECK(risk_engine::value_score(20, v) == doctest::Approx(0.5));
  CHECK(risk_engine::value_score(5, v) == 0.0);
  CHECK(risk_engine::value_score(99, std::vector<double>{1}) == 0.5);
  // Brute-force rank check on random data.
  Rng rng(4);
  std::vector<double> w;
  for (int i = 0; i < 300; ++i) w.push_back(std::floor(rng.uniform(0, 50)));
  const risk_engine::ValueRanker ranker(w);
  for (double x : w) {
    double below = 0, equal = 0;
    for (double y : w) {
      below += y < x;
      equal += y == x;
    }
    const double expected = std::clamp((below + 0.5 * equal - 0.5) / (w.size() - 1.0), 0.0, 1.0);
    CHECK(ranker.score(x) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("composite weighting and range checks") {
  CHECK(risk_engine::composite_score(1, 0) == doctest::Approx(0.7));
  CHECK(risk_engine::composite_score(0, 1) == doctest::Approx(0.3));
  CHECK_THROWS_AS(risk_engine::composite_score(1.1, 0), ParameterError);
  CHECK_THROWS_AS(risk_engine::composite_score(0.5, -0.01), ParameterError);
}

namespace {

struct CaseFixture {
  std::vector<TradeRecord> records;
  std::vector<features::FeatureRow> rows;
  std::vector<std::optional<risk_engine::RiskScore>> scores;
  std::vector<std::optional<int>> clusters;
  std::vector<std::uint8_t> mega;
  std::vector<price_anomaly::PriceAnomaly> anomalies;

  explicit CaseFixture(std::uint64_t seed) {
    Rng rng(seed);
    const features::VagueKeywordList kw;
    for (int i = 0; i < 400; ++i) {
      TradeRecord r;
      r.record_id = i;
      r.period = {2020, 1 + static_cast<int>(rng.below(12))};
      r.reporter = "R" + std::to_string(rng.below(4));
      r.partner = "P" + std::to_string(rng.below(4));
      r.hs_code = "2903" + std::to_string(10 + rng.below(3));
      r.description = rng.below(5) == 0 ? "mixtures" : "pure";
      // Coarse grid so composite and value ties happen.
      r.primary_value_usd = 100.0 * (1 + rng.below(20));
      r.net_wgt_kg = rng.below(8) == 0 ? 0.5 : 1.0 * (1 + rng.below(10));
      records.push_back(r);
      rows.push_back(features::build_feature_row(r, kw));
      clusters.push_back(static_cast<int>(rng.below(4)));
      mega.push_back(rng.below(20) == 0);
    }
    const auto priced = price_anomaly::priced_rows(records, rows);
    const auto stats = price_anomaly::group_stats(priced);
    scores = risk_engine::score_records(records, rows, stats);
    for (auto a : price_anomaly::detect_price_outliers(priced, stats, 4)) {
      anomalies.push_back(price_anomaly::triage(a, records[a.record_id].net_wgt_kg));
    }
  }

  risk_engine::CaseInputs inputs() const { return {records, rows, scores, clusters, mega}; }
};

}  // namespace

TEST_CASE("case file holds exactly the customs-review anomalies in oracle order") {
  CaseFixture fx(12);
  REQUIRE_FALSE(fx.anomalies.empty());
  const auto entries = risk_engine::build_case_file(fx.anomalies, fx.inputs());
  std::vector<RecordId> expected;
  for (const auto& a : fx.anomalies) {
    if (*a.queue == Queue::CustomsReview) expected.push_back(a.record_id);
  }
  // Brute-force order: selection sort on (composite desc, value desc, id asc).
  auto key_less = [&](RecordId a, RecordId b) {
    const double ca = fx.scores[a]->composite, cb = fx.scores[b]->composite;
    if (ca != cb) return ca > cb;
    const double va = fx.records[a].primary_value_usd, vb = fx.records[b].primary_value_usd;
    if (va != vb) return va > vb;
    return a < b;
  };
  for (std::size_t i = 0; i < expected.size(); ++i) {
    std::size_t best = i;
    for (std::size_t j = i + 1; j < expected.size(); ++j) {
      if (key_less(expected[j], expected[best])) best = j;
    }
    std::swap(expected[i], expected[best]);
  }
  REQUIRE(entries.size() == expected.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    CHECK(entries[i].record_id == expected[i]);
    CHECK(entries[i].composite ==
          doctest::Approx(0.7 * entries[i].price_score + 0.3 * entries[i].value_score).epsilon(1e-15));
    CHECK(entries[i].mega_trade == (fx.mega[entries[i].record_id] != 0));
    CHECK(entries[i].highest_priority == entries[i].is_vague);
  }
  const auto summary = risk_engine::summarize(entries, fx.anomalies);
  CHECK(summary.count == entries.size());
  CHECK(summary.customs_review + summary.data_quality_review == fx.anomalies.size());
  CHECK(summary.count <= fx.anomalies.size());
}

TEST_CASE("case file csv and summary json") {
  CaseFixture fx(3);
  const auto entries = risk_engine::build_case_file(fx.anomalies, fx.inputs());
  std::ostringstream out;
  risk_engine::write_case_file_csv(out, entries);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "record_id,period,reporter,partner,hs_code,description,primary_value_usd,net_wgt_kg,price_per_kg,"
        "cluster_id,is_vague,price_outlier_side,mega_trade,price_score,value_score,composite,queue,"
        "highest_priority");
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == entries.size());
  const auto json = risk_engine::case_file_summary_json(risk_engine::summarize(entries, fx.anomalies));
  CHECK(json.find("\"count\": " + std::to_string(entries.size())) != std::string::npos);
  CHECK(json.find("total_value_usd_text") != std::string::npos);
}
