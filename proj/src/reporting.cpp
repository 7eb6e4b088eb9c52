#include "tradescan/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tradescan/csv.hpp"
#include "tradescan/io.hpp"
#include "tradescan/trendline.hpp"

namespace tradescan::reporting {

std::vector<RouteCount> hotspot_routes(std::span<const risk_engine::CaseFileEntry> entries,
                                       std::size_t k) {
  std::map<RouteKey, std::size_t> counts;
  for (const auto& e : entries) ++counts[{e.reporter, e.partner}];
  std::vector<RouteCount> out;
  for (const auto& [route, n] : counts) out.push_back({route, n});
  std::stable_sort(out.begin(), out.end(),
                   [](const RouteCount& a, const RouteCount& b) { return a.count > b.count; });
  if (out.size() > k) out.resize(k);
  return out;
}

Summaries aggregate_summaries(const PipelineView& view, std::size_t top_k) {
  Summaries s;

  std::map<std::string, ReporterSummary> reporters;
  std::map<std::string, double> composite_sum;
  std::map<std::string, std::pair<std::size_t, double>> hs;  // count, composite sum
  std::map<RouteKey, std::size_t> flows;
  for (std::size_t i = 0; i < view.records.size(); ++i) {
    const auto& rec = view.records[i];
    auto& r = reporters[rec.reporter];
    r.reporter = rec.reporter;
    ++r.records;
    if (view.rows[i].is_vague) ++r.vague_count;
    if (const auto& score = view.scores[i]) {
      ++r.scored;
      composite_sum[rec.reporter] += score->composite;
      auto& h = hs[rec.hs_code];
      ++h.first;
      h.second += score->composite;
    }
    if (i < view.anomalous.size() && view.anomalous[i]) ++flows[{rec.reporter, rec.partner}];
  }

  std::map<std::string, PartnerSummary> partners;
  std::set<std::string> matrix_reporters;
  std::set<std::string> matrix_partners;
  for (const auto& e : view.case_entries) {
    auto& r = reporters[e.reporter];
    ++r.flagged_count;
    r.flagged_value += e.primary_value_usd;
    auto& p = partners[e.partner];
    p.partner = e.partner;
    ++p.flagged_count;
    p.flagged_value += e.primary_value_usd;
    matrix_reporters.insert(e.reporter);
    matrix_partners.insert(e.partner);
  }

  for (auto& [name, r] : reporters) {
    r.mean_composite = r.scored ? composite_sum[name] / static_cast<double>(r.scored) : 0.0;
    s.reporter_summary.push_back(r);
    s.vague_ranking.push_back({name, r.vague_count});
  }
  std::stable_sort(s.reporter_summary.begin(), s.reporter_summary.end(),
                   [](const ReporterSummary& a, const ReporterSummary& b) {
                     return a.flagged_value > b.flagged_value;
                   });
  std::stable_sort(s.vague_ranking.begin(), s.vague_ranking.end(),
                   [](const VagueCount& a, const VagueCount& b) { return a.count > b.count; });
  for (const auto& [name, p] : partners) s.partner_summary.push_back(p);
  std::stable_sort(s.partner_summary.begin(), s.partner_summary.end(),
                   [](const PartnerSummary& a, const PartnerSummary& b) {
                     return a.flagged_value > b.flagged_value;
                   });

  auto& m = s.pair_value_matrix;
  m.reporters.assign(matrix_reporters.begin(), matrix_reporters.end());
  m.partners.assign(matrix_partners.begin(), matrix_partners.end());
  m.cells.assign(m.reporters.size() * m.partners.size(), 0.0);
  for (const auto& e : view.case_entries) {
    const auto r = static_cast<std::size_t>(
        std::lower_bound(m.reporters.begin(), m.reporters.end(), e.reporter) - m.reporters.begin());
    const auto p = static_cast<std::size_t>(
        std::lower_bound(m.partners.begin(), m.partners.end(), e.partner) - m.partners.begin());
    m.cells[r * m.partners.size() + p] += e.primary_value_usd;
    m.total += e.primary_value_usd;
  }

  for (const auto& [code, h] : hs) {
    s.hs_risk_ranking.push_back({code, h.first, h.second / static_cast<double>(h.first)});
  }
  std::stable_sort(s.hs_risk_ranking.begin(), s.hs_risk_ranking.end(),
                   [](const HsRisk& a, const HsRisk& b) { return a.mean_composite > b.mean_composite; });
  if (s.hs_risk_ranking.size() > top_k) s.hs_risk_ranking.resize(top_k);

  for (const auto& [route, n] : flows) s.sankey_flows.push_back({route.reporter, route.partner, n});
  std::stable_sort(s.sankey_flows.begin(), s.sankey_flows.end(),
                   [](const SankeyFlow& a, const SankeyFlow& b) { return a.count > b.count; });
  if (s.sankey_flows.size() > top_k) s.sankey_flows.resize(top_k);
  return s;
}

TimeSeries temporal_series(std::span<const risk_engine::CaseFileEntry> entries,
                           std::span<const mega_trade::MegaTradeEvent> mega_events,
                           std::size_t top_reporters) {
  TimeSeries ts;
  std::map<int, double> monthly;
  for (const auto& e : entries) {
    if (e.period.has_month()) monthly[e.period.ordinal()] += e.primary_value_usd;
  }
  if (!monthly.empty()) {
    double cumulative = 0.0;
    for (int o = monthly.begin()->first; o <= monthly.rbegin()->first; ++o) {
      const auto it = monthly.find(o);
      const double v = it == monthly.end() ? 0.0 : it->second;
      cumulative += v;
      ts.flagged_monthly.push_back({Period::from_ordinal(o), v, cumulative});
    }
  }

  ts.spikes = mega_trade::temporal_spikes(mega_events);

  std::map<std::string, double> reporter_total;
  for (const auto& [year, by_reporter] : ts.spikes.yearly_by_reporter) {
    for (const auto& [name, v] : by_reporter) reporter_total[name] += v;
  }
  std::vector<std::pair<std::string, double>> ranked(reporter_total.begin(), reporter_total.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > top_reporters) ranked.resize(top_reporters);
  for (const auto& [name, v] : ranked) ts.stack_labels.push_back(name);
  ts.stack_labels.push_back("Other");

  for (const auto& [year, by_reporter] : ts.spikes.yearly_by_reporter) {
    YearlyMega y;
    y.year = year;
    y.count = ts.spikes.yearly_count[year];
    y.stacked.assign(ts.stack_labels.size(), 0.0);
    for (const auto& [name, v] : by_reporter) {
      const auto it = std::find(ts.stack_labels.begin(), ts.stack_labels.end() - 1, name);
      y.stacked[static_cast<std::size_t>(it - ts.stack_labels.begin())] += v;
    }
    for (double v : y.stacked) y.total_value += v;
    ts.mega_yearly.push_back(std::move(y));
  }
  return ts;
}

BoxplotStats boxplot_stats(const price_anomaly::GroupPriceStats& stats, std::span<const double> prices) {
  BoxplotStats b;
  b.hs_code = stats.hs_code;
  b.n = stats.n;
  b.q1 = stats.q1;
  b.median = stats.median;
  b.q3 = stats.q3;
  b.lower_fence = stats.lower_fence;
  b.upper_fence = stats.upper_fence;
  std::vector<double> sorted(prices.begin(), prices.end());
  std::sort(sorted.begin(), sorted.end());
  bool have_low = false;
  for (double p : sorted) {
    if (p < stats.lower_fence || p > stats.upper_fence) {
      b.outliers.push_back(p);
      continue;
    }
    if (!have_low) {
      b.whisker_low = p;
      have_low = true;
    }
    b.whisker_high = p;
  }
  return b;
}

std::vector<HistogramBin> histogram(std::span<const double> values, std::size_t bins) {
  std::vector<HistogramBin> out;
  if (values.empty() || bins == 0) return out;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out.push_back({lo + width * static_cast<double>(b),
                   b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1), 0});
  }
  for (double v : values) {
    std::size_t b = width > 0.0 ? static_cast<std::size_t>((v - lo) / width) : 0;
    ++out[std::min(b, bins - 1)].count;
  }
  return out;
}

ReportBundle build_bundle(const BundleInputs& inputs, const BundleOptions& options) {
  ReportBundle bundle;
  const auto& view = inputs.view;
  bundle.hotspot_routes = hotspot_routes(view.case_entries, options.top_k);
  bundle.summaries = aggregate_summaries(view, options.top_k);

  bundle.time_series = temporal_series(view.case_entries, inputs.mega_events);

  for (std::size_t i = 0; i < view.rows.size(); ++i) {
    const auto& row = view.rows[i];
    if (!row.cluster_eligible()) continue;
    bundle.scatter.push_back({row.record_id, *row.log_weight, *row.log_value,
                              i < view.cluster_ids.size() ? view.cluster_ids[i] : std::nullopt,
                              trendline::is_high_risk(view.records[i].hs_code, options.high_risk_codes)});
  }

  if (inputs.stats) {
    std::map<std::string, std::vector<double>> prices;
    for (const auto& p : inputs.priced) prices[p.hs_code].push_back(p.price_per_kg);
    for (const auto& [code, s] : *inputs.stats) {
      bundle.hs_boxplot_stats.push_back(boxplot_stats(s, prices[code]));
    }
  }

  std::optional<RouteKey> route = options.histogram_route;
  if (!route && !bundle.hotspot_routes.empty()) route = bundle.hotspot_routes.front().route;
  if (route) {
    std::vector<double> prices;
    for (const auto& e : view.case_entries) {
      if (e.reporter == route->reporter && e.partner == route->partner) prices.push_back(e.price_per_kg);
    }
    bundle.route_price_histogram = RouteHistogram{*route, histogram(prices, options.histogram_bins)};
  }
  return bundle;
}

namespace {

template <class Ranked, class Name, class Value>
void memo_list(std::ostringstream& out, const std::vector<Ranked>& items, Name name, Value value) {
  if (items.empty()) {
    out << "No flagged entries.\n";
    return;
  }
  for (std::size_t i = 0; i < items.size() && i < 3; ++i) {
    out << i + 1 << ". " << name(items[i]) << ": USD " << csv::format_fixed2(value(items[i]).first)
        << " across " << value(items[i]).second << " flagged entries\n";
  }
}

}  // namespace

std::string policy_memo(const ReportBundle& bundle, const risk_engine::CaseFileSummary& summary) {
  std::ostringstream out;
  out << "# Policy Memo: Priority Trade Anomalies\n\n";
  out << "## Summary\n\n";
  out << "Flagged entries for customs review: " << summary.count << "\n";
  out << "Total flagged value: USD " << csv::format_fixed2(summary.total_value_usd) << "\n";
  out << "Entries with both a price anomaly and a vague description: " << summary.highest_priority
      << "\n\n";

  out << "## Exporter hotspots\n\n";
  std::vector<ReporterSummary> exporters;
  for (const auto& r : bundle.summaries.reporter_summary) {
    if (r.flagged_count > 0) exporters.push_back(r);
  }
  memo_list(out, exporters, [](const ReporterSummary& r) { return r.reporter; },
            [](const ReporterSummary& r) { return std::pair{r.flagged_value, r.flagged_count}; });

  out << "\n## Destination hubs\n\n";
  memo_list(out, bundle.summaries.partner_summary, [](const PartnerSummary& p) { return p.partner; },
            [](const PartnerSummary& p) { return std::pair{p.flagged_value, p.flagged_count}; });

  out << "\n## Priority route\n\n";
  if (bundle.hotspot_routes.empty()) {
    out << "No recurring route among flagged entries.\n";
  } else {
    const auto& top = bundle.hotspot_routes.front();
    out << "Most frequent flagged route: " << top.route.reporter << " -> " << top.route.partner
        << " (" << top.count << " entries)\n";
  }

  out << "\n## Market shocks\n\n";
  if (bundle.time_series.spikes.flagged_months.empty()) {
    out << "No month exceeded the mega-trade spike threshold.\n";
  } else {
    out << "Mega-trade value spiked in:";
    for (const auto& m : bundle.time_series.spikes.flagged_months) out << ' ' << m.to_string();
    out << "\n";
  }

  out << "\n## Recommendations\n\n";
  out << "- Conduct targeted audits of the exporter hotspots and the priority route listed above, "
         "starting from the highest composite scores in the case file.\n";
  out << "- Open bilateral engagement with the customs administrations of the destination hubs "
         "to reconcile declared values and weights.\n";
  out << "- Require full commodity descriptions for shipments declared under catch-all "
         "wording.\n";
  return out.str();
}

namespace {

std::string to_text(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }

std::string csv_text(const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (const auto& r : rows) csv::write_row(out, r);
  return out.str();
}

}  // namespace

void write_reports(const ReportBundle& bundle, const std::filesystem::path& out_dir) {
  using csv::format_double;
  {
    std::vector<std::vector<std::string>> rows{{"rank", "reporter", "partner", "count"}};
    for (std::size_t i = 0; i < bundle.hotspot_routes.size(); ++i) {
      const auto& h = bundle.hotspot_routes[i];
      rows.push_back({std::to_string(i + 1), h.route.reporter, h.route.partner, std::to_string(h.count)});
    }
    io::write_file(out_dir / "hotspots.csv", csv_text(rows));
  }
  {
    const auto& m = bundle.summaries.pair_value_matrix;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"reporter"};
    header.insert(header.end(), m.partners.begin(), m.partners.end());
    rows.push_back(header);
    for (std::size_t r = 0; r < m.reporters.size(); ++r) {
      std::vector<std::string> row{m.reporters[r]};
      for (std::size_t p = 0; p < m.partners.size(); ++p) row.push_back(format_double(m.at(r, p)));
      rows.push_back(row);
    }
    io::write_file(out_dir / "pair_value_matrix.csv", csv_text(rows));
  }
  {
    std::vector<std::vector<std::string>> rows{{"reporter", "records", "scored", "mean_composite",
                                                "vague_count", "flagged_count", "flagged_value"}};
    for (const auto& r : bundle.summaries.reporter_summary) {
      rows.push_back({r.reporter, std::to_string(r.records), std::to_string(r.scored),
                      format_double(r.mean_composite), std::to_string(r.vague_count),
                      std::to_string(r.flagged_count), format_double(r.flagged_value)});
    }
    io::write_file(out_dir / "reporter_summary.csv", csv_text(rows));
  }
  {
    std::vector<std::vector<std::string>> rows{{"rank", "hs_code", "n", "mean_composite"}};
    for (std::size_t i = 0; i < bundle.summaries.hs_risk_ranking.size(); ++i) {
      const auto& h = bundle.summaries.hs_risk_ranking[i];
      rows.push_back({std::to_string(i + 1), h.hs_code, std::to_string(h.n), format_double(h.mean_composite)});
    }
    io::write_file(out_dir / "hs_risk_ranking.csv", csv_text(rows));
  }
  {
    std::vector<std::vector<std::string>> rows{{"reporter", "partner", "count"}};
    for (const auto& f : bundle.summaries.sankey_flows) {
      rows.push_back({f.reporter, f.partner, std::to_string(f.count)});
    }
    io::write_file(out_dir / "sankey_flows.csv", csv_text(rows));
  }
  {
    const auto& ts = bundle.time_series;
    nlohmann::ordered_json j;
    j["flagged_monthly"] = nlohmann::ordered_json::array();
    for (const auto& m : ts.flagged_monthly) {
      j["flagged_monthly"].push_back(
          {{"month", m.month.to_string()}, {"value", m.value}, {"cumulative", m.cumulative}});
    }
    j["mega_trade_monthly"] = nlohmann::ordered_json::array();
    for (const auto& m : ts.spikes.series) {
      j["mega_trade_monthly"].push_back(
          {{"month", m.month.to_string()}, {"count", m.count}, {"total_value", m.total_value}});
    }
    j["spike_threshold"] = ts.spikes.threshold;
    j["spike_months"] = nlohmann::ordered_json::array();
    for (const auto& m : ts.spikes.flagged_months) j["spike_months"].push_back(m.to_string());
    j["stack_labels"] = ts.stack_labels;
    j["mega_trade_yearly"] = nlohmann::ordered_json::array();
    for (const auto& y : ts.mega_yearly) {
      j["mega_trade_yearly"].push_back({{"year", y.year},
                                        {"count", y.count},
                                        {"total_value", y.total_value},
                                        {"stacked", y.stacked}});
    }
    io::write_file(out_dir / "time_series.json", j.dump(2) + "\n");
  }
  io::write_file(out_dir / "memo.md", bundle.memo_text);
}

std::string route_file_stem(const RouteKey& route) {
  const auto clean = [](const std::string& s) {
    std::string out;
    for (char c : s) {
      const bool keep = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
      out.push_back(keep ? c : '_');
    }
    return out;
  };
  return "plot_histogram_" + clean(route.reporter) + "__" + clean(route.partner);
}

void plot_exports(const ReportBundle& bundle, const std::filesystem::path& out_dir) {
  using csv::format_double;
  {
    std::vector<std::vector<std::string>> rows{
        {"record_id", "log_weight", "log_value", "cluster_id", "is_high_risk_hs"}};
    for (const auto& s : bundle.scatter) {
      rows.push_back({std::to_string(s.record_id), format_double(s.log_weight),
                      format_double(s.log_value), to_text(s.cluster_id),
                      s.is_high_risk_hs ? "true" : "false"});
    }
    io::write_file(out_dir / "plot_scatter.csv", csv_text(rows));
  }
  {
    std::vector<std::vector<std::string>> rows{{"hs_code", "n", "q1", "median", "q3", "whisker_low",
                                                "whisker_high", "lower_fence", "upper_fence", "outliers"}};
    for (const auto& b : bundle.hs_boxplot_stats) {
      std::string outliers;
      for (std::size_t i = 0; i < b.outliers.size(); ++i) {
        if (i) outliers += ';';
        outliers += format_double(b.outliers[i]);
      }
      rows.push_back({b.hs_code, std::to_string(b.n), format_double(b.q1), format_double(b.median),
                      format_double(b.q3), format_double(b.whisker_low), format_double(b.whisker_high),
                      format_double(b.lower_fence), format_double(b.upper_fence), outliers});
    }
    io::write_file(out_dir / "plot_boxplots.csv", csv_text(rows));
  }
  if (bundle.route_price_histogram) {
    const auto& h = *bundle.route_price_histogram;
    std::vector<std::vector<std::string>> rows{{"bin", "lower", "upper", "count"}};
    for (std::size_t i = 0; i < h.bins.size(); ++i) {
      rows.push_back({std::to_string(i), format_double(h.bins[i].lower), format_double(h.bins[i].upper),
                      std::to_string(h.bins[i].count)});
    }
    io::write_file(out_dir / (route_file_stem(h.route) + ".csv"), csv_text(rows));
  }
}

}  // namespace tradescan::reporting
