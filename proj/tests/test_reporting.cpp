#include <doctest.h>

#include "tradescan/reporting.hpp"

using namespace tradescan;
using namespace tradescan::reporting;

namespace {

risk_engine::CaseFileEntry entry(RecordId id, std::string rep, std::string part, double value, Period p = {2021, 1}) {
  risk_engine::CaseFileEntry e;
  e.record_id = id;
  e.reporter = std::move(rep);
  e.partner = std::move(part);
  e.primary_value_usd = value;
  e.period = p;
  e.price_per_kg = value / 10;
  return e;
}

}  // namespace

TEST_CASE("hotspot routes count entries with ties by route") {
  const std::vector<risk_engine::CaseFileEntry> entries{entry(0, "B", "C", 1), entry(1, "A", "C", 1),
                                                        entry(2, "B", "C", 1), entry(3, "A", "B", 1),
                                                        entry(4, "A", "C", 1)};
  const auto top = hotspot_routes(entries, 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].route == RouteKey{"A", "C"});
  CHECK(top[0].count == 2);
  CHECK(top[1].route == RouteKey{"B", "C"});
}

TEST_CASE("histogram bins cover the range and conserve counts") {
  const std::vector<double> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto bins = histogram(v, 5);
  REQUIRE(bins.size() == 5);
  CHECK(bins.front().lower == 0);
  CHECK(bins.back().upper == 10);
  std::size_t total = 0;
  for (const auto& b : bins) total += b.count;
  CHECK(total == v.size());
  CHECK(bins.back().count == 3);  // 8, 9 and the maximum
  CHECK(histogram(std::vector<double>{}, 5).empty());
  const auto flat = histogram(std::vector<double>{2, 2, 2}, 4);
  CHECK(flat[0].count == 3);
}

TEST_CASE("boxplot whiskers stop at the fences") {
  price_anomaly::GroupPriceStats s;
  s.hs_code = "2903";
  s.lower_fence = 1;
  s.upper_fence = 9;
  const std::vector<double> prices{20, 0.5, 2, 5, 8, 9};
  const auto b = boxplot_stats(s, prices);
  CHECK(b.whisker_low == 2);
  CHECK(b.whisker_high == 9);
  CHECK(b.outliers == std::vector<double>{0.5, 20});
}

TEST_CASE("temporal series stacks and sums consistently") {
  const std::vector<risk_engine::CaseFileEntry> entries{entry(0, "A", "B", 10, {2021, 1}),
                                                        entry(1, "A", "B", 5, {2021, 3})};
  std::vector<mega_trade::MegaTradeEvent> mega;
  const char* reps[] = {"R1", "R2", "R3", "R4", "R5", "R6", "R7"};
  for (int i = 0; i < 7; ++i) mega.push_back({i, 0.8, {2020 + i % 2, 1 + i}, reps[i], 100.0 * (i + 1)});
  const auto ts = temporal_series(entries, mega);
  REQUIRE(ts.flagged_monthly.size() == 3);
  CHECK(ts.flagged_monthly[1].value == 0);
  CHECK(ts.flagged_monthly[2].cumulative == 15);
  REQUIRE(ts.stack_labels.size() == 6);
  CHECK(ts.stack_labels.front() == "R7");
  CHECK(ts.stack_labels.back() == "Other");
  double total = 0;
  for (const auto& y : ts.mega_yearly) {
    double s = 0;
    for (double v : y.stacked) s += v;
    CHECK(s == doctest::Approx(y.total_value));
    CHECK(y.total_value == doctest::Approx(ts.spikes.yearly_total.at(y.year)));
    total += y.total_value;
  }
  CHECK(total == doctest::Approx(2800));
}

TEST_CASE("route file stems are filesystem safe") {
  CHECK(route_file_stem({"Viet Nam", "Korea, Rep."}) == "plot_histogram_Viet_Nam__Korea__Rep_");
}

TEST_CASE("memo reports totals from the summary") {
  ReportBundle b;
  b.hotspot_routes = {{{"Malaysia", "USA"}, 3}};
  b.summaries.reporter_summary = {{"Malaysia", 10, 10, 0.5, 0, 3, 1234.5}};
  b.summaries.partner_summary = {{"USA", 3, 1234.5}};
  risk_engine::CaseFileSummary s;
  s.count = 3;
  s.total_value_usd = 1234.5;
  const auto memo = policy_memo(b, s);
  CHECK(memo.find("Flagged entries for customs review: 3") != std::string::npos);
  CHECK(memo.find("USD 1234.50") != std::string::npos);
  CHECK(memo.find("Malaysia -> USA") != std::string::npos);
}
