#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tradescan/archetypes.hpp"
#include "tradescan/explain.hpp"
#include "tradescan/features.hpp"
#include "tradescan/ingest.hpp"
#include "tradescan/mega_trade.hpp"
#include "tradescan/price_anomaly.hpp"
#include "tradescan/reporting.hpp"
#include "tradescan/risk_engine.hpp"
#include "tradescan/trade_network.hpp"
#include "tradescan/trendline.hpp"

namespace tradescan::pipeline {

enum ExitCode : int { kOk = 0, kConfigError = 1, kInputError = 2, kStageFailure = 3 };

struct PipelineConfig {
  std::filesystem::path input;
  std::filesystem::path output_dir = "out";
  ingest::ColumnMapping mapping;
  std::vector<std::string> vague_keywords = features::VagueKeywordList().keywords();

  std::uint64_t seed = 42;  // master seed
  std::optional<std::uint64_t> kmeans_seed;
  std::optional<std::uint64_t> iforest_seed;

  int clusters = 4;
  int kmeans_max_iter = 300;
  double kmeans_tol = 1e-6;

  double iqr_multiplier = 1.5;
  std::size_t min_group_size = 4;

  int iforest_trees = 100;
  std::size_t iforest_subsample = 256;
  double contamination = 0.01;

  std::vector<std::string> high_risk_hs_codes = trendline::default_high_risk_codes();
  std::vector<std::string> aggregate_partners = {"World", "Areas, nes", "Other Asia, nes"};
  std::string community_weight = "count";  // count | value
  bool louvain_shuffle = false;

  int surrogate_trees = 20;
  int surrogate_max_depth = 6;
  std::size_t surrogate_min_leaf = 5;
  std::size_t surrogate_max_rows = 20000;
  std::size_t shap_background = 100;
  std::size_t shap_sample = 500;

  std::string histogram_route;  // "Reporter->Partner"; empty: top hotspot
  std::size_t histogram_bins = 20;
  std::size_t top_k = 15;

  bool write_plots = true;
  bool write_shap_values = true;
  bool write_timings = false;  // timings.json holds wall-clock and is never byte-stable

  // Throws ConfigError on out-of-range values.
  void validate() const;
};

// The manifest snapshot leaves out output_dir so that where a run is written
// does not change what is written.
std::string config_to_json(const PipelineConfig& config, bool with_output_dir = true);
PipelineConfig config_from_json(const std::string& text);

struct StageSeeds {
  std::uint64_t master = 0;
  std::uint64_t kmeans = 0;
  std::uint64_t iforest = 0;
  std::uint64_t louvain = 0;
  std::uint64_t surrogate = 0;
  std::uint64_t sampling = 0;
};

StageSeeds derive_seeds(const PipelineConfig& config);

struct StageCounts {
  std::size_t data_lines = 0;
  std::size_t parsed = 0;
  std::size_t rejected = 0;
  std::size_t cluster_eligible = 0;
  std::size_t priced = 0;
  std::size_t price_flagged = 0;
  std::size_t customs_review = 0;
  std::size_t data_quality_review = 0;
  std::size_t mega_trades = 0;
  std::size_t vague = 0;
  std::size_t case_file_entries = 0;
  std::size_t network_nodes = 0;
  std::size_t communities = 0;
};

struct RunManifest {
  std::string config_json;
  std::string input_checksum;  // FNV-1a 64 of the input bytes
  StageCounts counts;
  StageSeeds seeds;
  std::vector<std::string> completed_stages;
  std::map<std::string, double> stage_seconds;  // timings.json only, when enabled
  std::vector<std::string> warnings;
  std::string status = "ok";
  std::string failed_stage;
  std::string error;

  // Deterministic part only.
  std::string to_json() const;
};

// Every intermediate product of one run, indexed by record position.
struct PipelineState {
  ingest::ParseResult parsed;
  std::vector<features::FeatureRow> rows;
  archetypes::KMeansModel kmeans;
  std::vector<archetypes::ArchetypeLabel> archetype_labels;
  double median_log_weight = 0.0;
  double median_log_value = 0.0;
  std::vector<std::optional<int>> cluster_ids;
  std::vector<price_anomaly::PricedRow> priced;
  price_anomaly::StatsMap stats;
  std::vector<price_anomaly::PriceAnomaly> anomalies;  // triaged
  mega_trade::IsolationForestModel iforest;
  std::vector<mega_trade::MegaTradeEvent> mega_events;
  std::vector<std::uint8_t> mega_flags;
  std::vector<std::optional<risk_engine::RiskScore>> scores;
  std::vector<risk_engine::CaseFileEntry> case_entries;
  risk_engine::CaseFileSummary case_summary;
  trade_network::TradeGraph graph;
  trade_network::CommunityPartition communities;
  trade_network::CentralityReport centrality;
  std::optional<explain::SurrogateForest> surrogate;
  std::vector<explain::ShapExplanation> explanations;
  std::vector<explain::FeatureImportance> shap_ranking;
  std::size_t shap_background_rows = 0;
  std::optional<trendline::DivergenceReport> trend;
  std::optional<trendline::TrendlineFit> trend_all_only;
  reporting::ReportBundle bundle;
};

// Failure inside a named stage.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what, bool config_cause = false)
      : std::runtime_error(what), stage_(std::move(stage)), config_cause_(config_cause) {}
  const std::string& stage() const { return stage_; }
  // The stage failed because of configuration (e.g. a missing mapped column).
  bool config_cause() const { return config_cause_; }

 private:
  std::string stage_;
  bool config_cause_ = false;
};

// Runs every stage in memory on already-read input text. Throws StageError.
PipelineState run_stages(const std::string& input_text, const PipelineConfig& config,
                         RunManifest& manifest);

// Writes every output file of a finished state.
void write_outputs(const PipelineState& state, const PipelineConfig& config,
                   const RunManifest& manifest, const std::filesystem::path& out_dir);

struct RunResult {
  int exit_code = kOk;
  RunManifest manifest;
};

// Full run with files. Missing input: exit 2 and nothing written. Stage
// failure: exit 3 with a partial manifest.json.
RunResult run_pipeline(const PipelineConfig& config);

}  // namespace tradescan::pipeline
