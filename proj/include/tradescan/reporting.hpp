#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tradescan/features.hpp"
#include "tradescan/mega_trade.hpp"
#include "tradescan/price_anomaly.hpp"
#include "tradescan/risk_engine.hpp"
#include "tradescan/types.hpp"

namespace tradescan::reporting {

struct RouteKey {
  std::string reporter;
  std::string partner;

  auto operator<=>(const RouteKey&) const = default;
};

struct RouteCount {
  RouteKey route;
  std::size_t count = 0;
};

// Top-k routes by case-file entry count, ties by route.
std::vector<RouteCount> hotspot_routes(std::span<const risk_engine::CaseFileEntry> entries,
                                       std::size_t k = 15);

struct ReporterSummary {
  std::string reporter;
  std::size_t records = 0;
  std::size_t scored = 0;
  double mean_composite = 0.0;  // over scored records; 0 when none
  std::size_t vague_count = 0;
  std::size_t flagged_count = 0;  // case-file entries
  double flagged_value = 0.0;
};

struct PartnerSummary {
  std::string partner;
  std::size_t flagged_count = 0;
  double flagged_value = 0.0;
};

struct PairValueMatrix {
  std::vector<std::string> reporters;
  std::vector<std::string> partners;
  std::vector<double> cells;  // row-major reporters x partners
  double total = 0.0;

  double at(std::size_t r, std::size_t p) const { return cells[r * partners.size() + p]; }
};

struct HsRisk {
  std::string hs_code;
  std::size_t n = 0;
  double mean_composite = 0.0;
};

struct SankeyFlow {
  std::string reporter;
  std::string partner;
  std::size_t count = 0;
};

struct VagueCount {
  std::string reporter;
  std::size_t count = 0;
};

// Per-record pipeline outputs shared by the aggregations; all spans are
// indexed by record position.
struct PipelineView {
  std::span<const TradeRecord> records;
  std::span<const features::FeatureRow> rows;
  std::span<const std::optional<risk_engine::RiskScore>> scores;
  std::span<const std::optional<int>> cluster_ids;
  std::span<const std::uint8_t> anomalous;  // price outlier, mega-trade or vague
  std::span<const risk_engine::CaseFileEntry> case_entries;
};

struct Summaries {
  std::vector<ReporterSummary> reporter_summary;  // flagged value desc, then name
  std::vector<PartnerSummary> partner_summary;    // flagged value desc, then name
  std::vector<VagueCount> vague_ranking;          // count desc, then name
  PairValueMatrix pair_value_matrix;
  std::vector<HsRisk> hs_risk_ranking;            // top 15, mean desc, then code
  std::vector<SankeyFlow> sankey_flows;           // top 15, count desc, then route
};

Summaries aggregate_summaries(const PipelineView& view, std::size_t top_k = 15);

struct MonthlyValue {
  Period month;
  double value = 0.0;
  double cumulative = 0.0;
};

struct YearlyMega {
  int year = 0;
  std::size_t count = 0;
  double total_value = 0.0;               // sum of `stacked`
  std::vector<double> stacked;            // aligned with TimeSeries::stack_labels
};

struct TimeSeries {
  std::vector<MonthlyValue> flagged_monthly;
  std::vector<std::string> stack_labels;  // top-5 mega-trade reporters, then "Other"
  std::vector<YearlyMega> mega_yearly;
  mega_trade::SpikeReport spikes;
};

TimeSeries temporal_series(std::span<const risk_engine::CaseFileEntry> entries,
                           std::span<const mega_trade::MegaTradeEvent> mega_events,
                           std::size_t top_reporters = 5);

struct ScatterRow {
  RecordId record_id = 0;
  double log_weight = 0.0;
  double log_value = 0.0;
  std::optional<int> cluster_id;
  bool is_high_risk_hs = false;
};

struct BoxplotStats {
  std::string hs_code;
  std::size_t n = 0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;   // smallest value >= lower fence
  double whisker_high = 0.0;  // largest value <= upper fence
  double lower_fence = 0.0;
  double upper_fence = 0.0;
  std::vector<double> outliers;  // ascending
};

BoxplotStats boxplot_stats(const price_anomaly::GroupPriceStats& stats, std::span<const double> prices);

struct HistogramBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
};

// Equal-width bins over [min, max]; empty input yields no bins.
std::vector<HistogramBin> histogram(std::span<const double> values, std::size_t bins = 20);

struct RouteHistogram {
  RouteKey route;
  std::vector<HistogramBin> bins;
};

struct ReportBundle {
  std::vector<RouteCount> hotspot_routes;
  Summaries summaries;
  TimeSeries time_series;
  std::vector<ScatterRow> scatter;
  std::vector<BoxplotStats> hs_boxplot_stats;
  std::optional<RouteHistogram> route_price_histogram;
  std::string memo_text;
};

struct BundleOptions {
  std::size_t top_k = 15;
  std::size_t histogram_bins = 20;
  std::optional<RouteKey> histogram_route;  // defaults to the top hotspot
  std::vector<std::string> high_risk_codes;
};

struct BundleInputs {
  PipelineView view;
  std::span<const mega_trade::MegaTradeEvent> mega_events;
  std::span<const price_anomaly::PricedRow> priced;
  const price_anomaly::StatsMap* stats = nullptr;
};

// Assembles everything except the memo.
ReportBundle build_bundle(const BundleInputs& inputs, const BundleOptions& options);

// Plain-text memo; every figure comes from the bundle or the summary.
std::string policy_memo(const ReportBundle& bundle, const risk_engine::CaseFileSummary& summary);

// hotspots.csv, pair_value_matrix.csv, reporter_summary.csv,
// hs_risk_ranking.csv, sankey_flows.csv, time_series.json, memo.md.
// Throws IoError when a file cannot be written.
void write_reports(const ReportBundle& bundle, const std::filesystem::path& out_dir);

// plot_scatter.csv, plot_boxplots.csv, plot_histogram_<route>.csv.
void plot_exports(const ReportBundle& bundle, const std::filesystem::path& out_dir);

std::string route_file_stem(const RouteKey& route);

}  // namespace tradescan::reporting
