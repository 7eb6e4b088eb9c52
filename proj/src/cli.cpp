#include "tradescan/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tradescan/errors.hpp"
#include "tradescan/io.hpp"
#include "tradescan/pipeline.hpp"
#include "tradescan/synthgen.hpp"

namespace tradescan::cli {

namespace {

using pipeline::ExitCode;
using pipeline::PipelineConfig;

std::string default_out_dir() {
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
  return "out";
}

// Registers every PipelineConfig key as a long flag; the same names are the
// keys of the flat config file.
struct ConfigOptions {
  PipelineConfig config;
  std::string input;
  std::string out;
  std::string config_file;
  std::uint64_t kmeans_seed = 0;
  std::uint64_t iforest_seed = 0;
  CLI::Option* kmeans_seed_opt = nullptr;
  CLI::Option* iforest_seed_opt = nullptr;

  void add_mapping(CLI::App& app) {
    auto& m = config.mapping;
    app.add_option("--column_period", m.period, "Header of the period column (YYYY or YYYYMM)")
        ->capture_default_str();
    app.add_option("--column_reporter", m.reporter, "Header of the reporter country column")
        ->capture_default_str();
    app.add_option("--column_partner", m.partner, "Header of the partner country column")->capture_default_str();
    app.add_option("--column_flow", m.flow, "Header of the flow column")->capture_default_str();
    app.add_option("--column_hs_code", m.hs_code, "Header of the HS commodity code column")->capture_default_str();
    app.add_option("--column_description", m.description, "Header of the commodity description column")
        ->capture_default_str();
    app.add_option("--column_value", m.value, "Header of the declared value (USD) column")->capture_default_str();
    app.add_option("--column_weight", m.weight, "Header of the net weight (kg) column")->capture_default_str();
  }

  void add_io(CLI::App& app, bool input_required) {
    auto* in = app.add_option("--input", input, "Input trade CSV");
    if (input_required) in->required();
    out = default_out_dir();
    app.add_option("--out", out, std::string("Output directory (default from ") + kOutDirEnv + " or 'out')")
        ->capture_default_str();
    app.add_option("--config", config_file, "Flat key=value config file; every key matches a long flag");
  }

  void add_all(CLI::App& app) {
    add_io(app, true);
    add_mapping(app);
    auto& c = config;
    app.add_option("--vague_keywords", c.vague_keywords, "Case-insensitive substrings marking vague descriptions")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--seed", c.seed, "Master seed; every stage seed is derived from it")->capture_default_str();
    kmeans_seed_opt = app.add_option("--kmeans_seed", kmeans_seed, "Override the derived k-means seed");
    iforest_seed_opt = app.add_option("--iforest_seed", iforest_seed, "Override the derived isolation forest seed");
    app.add_option("--clusters", c.clusters, "Number of k-means archetypes (>= 1)")->capture_default_str();
    app.add_option("--kmeans_max_iter", c.kmeans_max_iter, "k-means iteration cap (>= 1)")->capture_default_str();
    app.add_option("--kmeans_tol", c.kmeans_tol, "k-means centroid shift tolerance (>= 0)")->capture_default_str();
    app.add_option("--iqr_multiplier", c.iqr_multiplier, "Tukey fence multiplier (> 0)")->capture_default_str();
    app.add_option("--min_group_size", c.min_group_size, "Smallest HS group that gets fences (>= 1)")
        ->capture_default_str();
    app.add_option("--iforest_trees", c.iforest_trees, "Isolation trees (>= 1)")->capture_default_str();
    app.add_option("--iforest_subsample", c.iforest_subsample, "Isolation tree subsample size (>= 2)")
        ->capture_default_str();
    app.add_option("--contamination", c.contamination, "Share of records flagged as mega-trades, in (0, 0.5)")
        ->capture_default_str();
    app.add_option("--high_risk_hs_codes", c.high_risk_hs_codes, "HS codes (6-digit prefixes) of the high-risk set")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--aggregate_partners", c.aggregate_partners, "Partner labels excluded from the trade graph")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--community_weight", c.community_weight, "Louvain edge weight: count or value")
        ->capture_default_str();
    app.add_option("--louvain_shuffle", c.louvain_shuffle, "Seeded Louvain node order instead of label order")
        ->capture_default_str();
    app.add_option("--surrogate_trees", c.surrogate_trees, "Trees in the surrogate forest (>= 1)")
        ->capture_default_str();
    app.add_option("--surrogate_max_depth", c.surrogate_max_depth, "Surrogate tree depth (>= 1)")
        ->capture_default_str();
    app.add_option("--surrogate_min_leaf", c.surrogate_min_leaf, "Smallest surrogate leaf (>= 1)")
        ->capture_default_str();
    app.add_option("--surrogate_max_rows", c.surrogate_max_rows, "Seeded cap on surrogate training rows (>= 10)")
        ->capture_default_str();
    app.add_option("--shap_background", c.shap_background, "Background rows for Shapley values (>= 1)")
        ->capture_default_str();
    app.add_option("--shap_sample", c.shap_sample, "Rows explained with Shapley values")->capture_default_str();
    app.add_option("--histogram_route", c.histogram_route, "Route for the price histogram, 'Reporter->Partner'")
        ->capture_default_str();
    app.add_option("--histogram_bins", c.histogram_bins, "Price histogram bins (>= 1)")->capture_default_str();
    app.add_option("--top_k", c.top_k, "Length of hotspot and ranking tables (>= 1)")->capture_default_str();
    app.add_option("--write_plots", c.write_plots, "Write plot_*.csv exports")->capture_default_str();
    app.add_option("--write_shap_values", c.write_shap_values, "Write per-record shap_values.csv")
        ->capture_default_str();
    app.add_option("--write_timings", c.write_timings, "Write per-stage wall-clock seconds to timings.json")
        ->capture_default_str();
  }

  PipelineConfig finish() const {
    PipelineConfig c = config;
    c.input = input;
    c.output_dir = out;
    if (kmeans_seed_opt != nullptr && kmeans_seed_opt->count() > 0) c.kmeans_seed = kmeans_seed;
    if (iforest_seed_opt != nullptr && iforest_seed_opt->count() > 0) c.iforest_seed = iforest_seed;
    return c;
  }
};

// Fills options that were not given on the command line from a flat config
// file, so flags take precedence. Keys may sit at top level or under a
// section named after the subcommand.
void apply_config_file(CLI::App& sub, const std::string& path) {
  if (path.empty()) return;
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_file(path);
  } catch (const CLI::Error& e) {
    throw ConfigError("cannot parse config file " + path + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == sub.get_name())) {
      throw ConfigError("config file " + path + ": unexpected section for key '" + item.fullname() + "'");
    }
    CLI::Option* opt = sub.get_option_no_throw("--" + item.name);
    if (opt == nullptr || item.name == "config") {
      throw ConfigError("config file " + path + ": unknown key '" + item.name + "'");
    }
    if (opt->count() > 0) continue;
    try {
      opt->add_result(item.inputs);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ConfigError("config file " + path + ": bad value for '" + item.name + "': " + e.what());
    }
  }
}

int run_analyze(const PipelineConfig& config, std::ostream& out, std::ostream& err) {
  const auto result = pipeline::run_pipeline(config);
  if (result.exit_code != pipeline::kOk) {
    err << "error";
    if (!result.manifest.failed_stage.empty()) err << " in stage " << result.manifest.failed_stage;
    err << ": " << result.manifest.error << "\n";
    return result.exit_code;
  }
  const auto& n = result.manifest.counts;
  out << "parsed " << n.parsed << ", rejected " << n.rejected << ", price-flagged " << n.price_flagged
      << ", mega-trades " << n.mega_trades << ", case file " << n.case_file_entries << "\n";
  for (const auto& w : result.manifest.warnings) err << "warning: " << w << "\n";
  out << "outputs written to " << config.output_dir.string() << "\n";
  return pipeline::kOk;
}

int run_ingest(const PipelineConfig& config, std::ostream& out, std::ostream& err) {
  try {
    config.mapping.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return pipeline::kConfigError;
  }
  std::string text;
  try {
    text = io::read_file(config.input);
  } catch (const IoError& e) {
    err << "input error: " << e.what() << "\n";
    return pipeline::kInputError;
  }
  ingest::ParseResult parsed;
  try {
    std::istringstream in(text);
    parsed = ingest::parse_stream(in, config.mapping);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return pipeline::kConfigError;
  } catch (const std::exception& e) {
    err << "error in stage ingest: " << e.what() << "\n";
    return pipeline::kStageFailure;
  }
  try {
    std::filesystem::create_directories(config.output_dir);
    std::ostringstream rejects;
    ingest::write_rejects_csv(rejects, parsed.rejects);
    io::write_file(config.output_dir / "rejects.csv", rejects.str());
    std::map<std::string, std::size_t> by_reason;
    for (const auto& r : parsed.rejects) ++by_reason[std::string(ingest::to_string(r.reason))];
    nlohmann::ordered_json j;
    j["input_checksum_fnv1a64"] = io::fnv1a_hex(text);
    j["data_lines"] = parsed.data_lines;
    j["parsed"] = parsed.records.size();
    j["rejected"] = parsed.rejects.size();
    j["rejected_by_reason"] = by_reason;
    io::write_file(config.output_dir / "ingest_summary.json", j.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "output error: " << e.what() << "\n";
    return pipeline::kInputError;
  }
  out << "parsed " << parsed.records.size() << ", rejected " << parsed.rejects.size() << " of "
      << parsed.data_lines << " data lines\n";
  return pipeline::kOk;
}

int run_report(const std::filesystem::path& manifest_path, std::string out_override, std::ostream& out,
               std::ostream& err) {
  std::string manifest_text;
  try {
    manifest_text = io::read_file(manifest_path);
  } catch (const IoError& e) {
    err << "input error: " << e.what() << "\n";
    return pipeline::kInputError;
  }
  PipelineConfig config;
  std::string checksum;
  try {
    const auto j = nlohmann::json::parse(manifest_text);
    if (j.value("status", "") != "ok") {
      err << "config error: manifest records a failed run\n";
      return pipeline::kConfigError;
    }
    config = pipeline::config_from_json(j.at("config").dump());
    checksum = j.at("input_checksum_fnv1a64").get<std::string>();
    config.validate();
  } catch (const std::exception& e) {
    err << "config error: unusable manifest: " << e.what() << "\n";
    return pipeline::kConfigError;
  }
  std::string text;
  try {
    text = io::read_file(config.input);
  } catch (const IoError& e) {
    err << "input error: " << e.what() << "\n";
    return pipeline::kInputError;
  }
  if (io::fnv1a_hex(text) != checksum) {
    err << "input error: " << config.input.string() << " changed since the manifest was written\n";
    return pipeline::kInputError;
  }
  const std::filesystem::path out_dir =
      out_override.empty() ? manifest_path.parent_path() : std::filesystem::path(out_override);
  pipeline::RunManifest manifest;
  manifest.config_json = pipeline::config_to_json(config, false);
  manifest.input_checksum = checksum;
  try {
    const auto state = pipeline::run_stages(text, config, manifest);
    std::filesystem::create_directories(out_dir.empty() ? "." : out_dir);
    reporting::write_reports(state.bundle, out_dir);
    if (config.write_plots) reporting::plot_exports(state.bundle, out_dir);
  } catch (const pipeline::StageError& e) {
    err << "error in stage " << e.stage() << ": " << e.what() << "\n";
    return e.config_cause() ? pipeline::kConfigError : pipeline::kStageFailure;
  } catch (const std::exception& e) {
    err << "output error: " << e.what() << "\n";
    return pipeline::kInputError;
  }
  out << "reports written to " << (out_dir.empty() ? std::string(".") : out_dir.string()) << "\n";
  return pipeline::kOk;
}

struct SynthOptions {
  synthgen::PlantSpec spec;
  std::string out;
  std::string mega_month = "202102";
  std::string config_file;

  void add(CLI::App& app) {
    out = default_out_dir();
    app.add_option("--out", out, "Output directory for synthetic.csv and ground_truth.json")
        ->capture_default_str();
    app.add_option("--records", spec.n_records, "Data lines, malformed ones included")->capture_default_str();
    app.add_option("--seed", spec.seed, "Generator seed")->capture_default_str();
    app.add_option("--price_outliers", spec.n_price_outliers, "Planted high-side price outliers")
        ->capture_default_str();
    app.add_option("--vague", spec.n_vague, "Planted vague descriptions")->capture_default_str();
    app.add_option("--mega_trades", spec.n_mega_trades, "Planted mega-trades")->capture_default_str();
    app.add_option("--general_slope", spec.general_slope, "log value on log weight slope, general goods")
        ->capture_default_str();
    app.add_option("--high_risk_slope", spec.high_risk_slope, "Slope for the high-risk HS codes")
        ->capture_default_str();
    app.add_option("--intra_block_bias", spec.intra_block_bias, "Probability a route stays in its block")
        ->capture_default_str();
    app.add_option("--defect_rate", spec.defect_rate, "Share of malformed lines")->capture_default_str();
    app.add_option("--dominant_route_share", spec.dominant_route_share,
                   "Share of price outliers on the dominant route")
        ->capture_default_str();
    app.add_option("--mega_month", mega_month, "Month (YYYYMM) of the planted mega-trades")->capture_default_str();
    app.add_option("--config", config_file, "Flat key=value config file; every key matches a long flag");
  }
};

int run_synth(SynthOptions opts, std::ostream& out, std::ostream& err) {
  const auto month = ingest::parse_period(opts.mega_month);
  if (!month || !month->has_month()) {
    err << "config error: --mega_month must be YYYYMM\n";
    return pipeline::kConfigError;
  }
  opts.spec.mega_month = *month;
  synthgen::SynthDataset data;
  try {
    data = synthgen::generate_dataset(opts.spec);
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return pipeline::kConfigError;
  }
  try {
    const std::filesystem::path dir = opts.out;
    std::filesystem::create_directories(dir);
    io::write_file(dir / "synthetic.csv", data.csv);
    io::write_file(dir / "ground_truth.json", data.truth.to_json());
  } catch (const std::exception& e) {
    err << "output error: " << e.what() << "\n";
    return pipeline::kInputError;
  }
  out << "wrote " << data.truth.n_records << " data lines to " << opts.out << "\n";
  return pipeline::kOk;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"tradescan: forensic screening of customs trade records"};
  app.name("tradescan");
  app.require_subcommand(1);

  ConfigOptions analyze_opts;
  auto* analyze = app.add_subcommand("analyze", "Run the full pipeline and write every output");
  analyze_opts.add_all(*analyze);

  ConfigOptions ingest_opts;
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse the input and write rejects.csv and ingest_summary.json");
  ingest_opts.add_io(*ingest_cmd, true);
  ingest_opts.add_mapping(*ingest_cmd);

  std::string manifest_path;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Re-emit reports from a prior run's manifest.json");
  report->add_option("--manifest", manifest_path, "manifest.json of a finished run")->required();
  report->add_option("--out", report_out, "Output directory (default: the manifest's directory)");

  SynthOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with ground truth");
  synth_opts.add(*synth);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return pipeline::kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return pipeline::kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return pipeline::kConfigError;
  }

  try {
    if (analyze->parsed()) {
      apply_config_file(*analyze, analyze_opts.config_file);
      return run_analyze(analyze_opts.finish(), out, err);
    }
    if (ingest_cmd->parsed()) {
      apply_config_file(*ingest_cmd, ingest_opts.config_file);
      return run_ingest(ingest_opts.finish(), out, err);
    }
    if (synth->parsed()) {
      apply_config_file(*synth, synth_opts.config_file);
      return run_synth(synth_opts, out, err);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return pipeline::kConfigError;
  }
  if (report->parsed()) return run_report(manifest_path, report_out, out, err);
  err << app.help();
  return pipeline::kConfigError;
}

}  // namespace tradescan::cli
