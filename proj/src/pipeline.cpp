#include "tradescan/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tradescan/csv.hpp"
#include "tradescan/errors.hpp"
#include "tradescan/io.hpp"
#include "tradescan/rng.hpp"
#include "tradescan/stats.hpp"

namespace tradescan::pipeline {

using nlohmann::ordered_json;

void PipelineConfig::validate() const {
  mapping.validate();
  features::VagueKeywordList check(vague_keywords);
  if (clusters < 1) throw ConfigError("clusters must be at least 1");
  if (kmeans_max_iter < 1) throw ConfigError("kmeans_max_iter must be at least 1");
  if (!(kmeans_tol >= 0.0)) throw ConfigError("kmeans_tol must be non-negative");
  if (!(iqr_multiplier > 0.0)) throw ConfigError("iqr_multiplier must be positive");
  if (min_group_size < 1) throw ConfigError("min_group_size must be at least 1");
  if (iforest_trees < 1) throw ConfigError("iforest_trees must be at least 1");
  if (iforest_subsample < 2) throw ConfigError("iforest_subsample must be at least 2");
  if (!(contamination > 0.0 && contamination < 0.5)) {
    throw ConfigError("contamination must lie in (0, 0.5)");
  }
  if (community_weight != "count" && community_weight != "value") {
    throw ConfigError("community_weight must be 'count' or 'value'");
  }
  if (surrogate_trees < 1) throw ConfigError("surrogate_trees must be at least 1");
  if (surrogate_max_depth < 1) throw ConfigError("surrogate_max_depth must be at least 1");
  if (surrogate_min_leaf < 1) throw ConfigError("surrogate_min_leaf must be at least 1");
  if (surrogate_max_rows < 10) throw ConfigError("surrogate_max_rows must be at least 10");
  if (shap_background < 1) throw ConfigError("shap_background must be at least 1");
  if (histogram_bins < 1) throw ConfigError("histogram_bins must be at least 1");
  if (top_k < 1) throw ConfigError("top_k must be at least 1");
  for (const auto& code : high_risk_hs_codes) {
    if (code.empty() || !std::all_of(code.begin(), code.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw ConfigError("high_risk_hs_codes entry '" + code + "' is not a digit string");
    }
  }
  if (!histogram_route.empty() && histogram_route.find("->") == std::string::npos) {
    throw ConfigError("histogram_route must look like 'Reporter->Partner'");
  }
}

std::string config_to_json(const PipelineConfig& c, bool with_output_dir) {
  ordered_json j;
  j["input"] = c.input.string();
  if (with_output_dir) j["output_dir"] = c.output_dir.string();
  j["mapping"] = {{"period", c.mapping.period},   {"reporter", c.mapping.reporter},
                  {"partner", c.mapping.partner}, {"flow", c.mapping.flow},
                  {"hs_code", c.mapping.hs_code}, {"description", c.mapping.description},
                  {"value", c.mapping.value},     {"weight", c.mapping.weight}};
  j["vague_keywords"] = c.vague_keywords;
  j["seed"] = c.seed;
  j["kmeans_seed"] = c.kmeans_seed ? ordered_json(*c.kmeans_seed) : ordered_json(nullptr);
  j["iforest_seed"] = c.iforest_seed ? ordered_json(*c.iforest_seed) : ordered_json(nullptr);
  j["clusters"] = c.clusters;
  j["kmeans_max_iter"] = c.kmeans_max_iter;
  j["kmeans_tol"] = c.kmeans_tol;
  j["iqr_multiplier"] = c.iqr_multiplier;
  j["min_group_size"] = c.min_group_size;
  j["iforest_trees"] = c.iforest_trees;
  j["iforest_subsample"] = c.iforest_subsample;
  j["contamination"] = c.contamination;
  j["high_risk_hs_codes"] = c.high_risk_hs_codes;
  j["aggregate_partners"] = c.aggregate_partners;
  j["community_weight"] = c.community_weight;
  j["louvain_shuffle"] = c.louvain_shuffle;
  j["surrogate_trees"] = c.surrogate_trees;
  j["surrogate_max_depth"] = c.surrogate_max_depth;
  j["surrogate_min_leaf"] = c.surrogate_min_leaf;
  j["surrogate_max_rows"] = c.surrogate_max_rows;
  j["shap_background"] = c.shap_background;
  j["shap_sample"] = c.shap_sample;
  j["histogram_route"] = c.histogram_route;
  j["histogram_bins"] = c.histogram_bins;
  j["top_k"] = c.top_k;
  j["write_plots"] = c.write_plots;
  j["write_shap_values"] = c.write_shap_values;
  j["write_timings"] = c.write_timings;
  return j.dump(2);
}

PipelineConfig config_from_json(const std::string& text) {
  PipelineConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    const auto get = [&](const char* key, auto& field) {
      if (j.contains(key) && !j.at(key).is_null()) {
        field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
      }
    };
    std::string input = c.input.string();
    std::string out = c.output_dir.string();
    get("input", input);
    get("output_dir", out);
    c.input = input;
    c.output_dir = out;
    if (j.contains("mapping")) {
      const auto& m = j.at("mapping");
      c.mapping.period = m.value("period", c.mapping.period);
      c.mapping.reporter = m.value("reporter", c.mapping.reporter);
      c.mapping.partner = m.value("partner", c.mapping.partner);
      c.mapping.flow = m.value("flow", c.mapping.flow);
      c.mapping.hs_code = m.value("hs_code", c.mapping.hs_code);
      c.mapping.description = m.value("description", c.mapping.description);
      c.mapping.value = m.value("value", c.mapping.value);
      c.mapping.weight = m.value("weight", c.mapping.weight);
    }
    get("vague_keywords", c.vague_keywords);
    get("seed", c.seed);
    if (j.contains("kmeans_seed") && !j.at("kmeans_seed").is_null()) {
      c.kmeans_seed = j.at("kmeans_seed").get<std::uint64_t>();
    }
    if (j.contains("iforest_seed") && !j.at("iforest_seed").is_null()) {
      c.iforest_seed = j.at("iforest_seed").get<std::uint64_t>();
    }
    get("clusters", c.clusters);
    get("kmeans_max_iter", c.kmeans_max_iter);
    get("kmeans_tol", c.kmeans_tol);
    get("iqr_multiplier", c.iqr_multiplier);
    get("min_group_size", c.min_group_size);
    get("iforest_trees", c.iforest_trees);
    get("iforest_subsample", c.iforest_subsample);
    get("contamination", c.contamination);
    get("high_risk_hs_codes", c.high_risk_hs_codes);
    get("aggregate_partners", c.aggregate_partners);
    get("community_weight", c.community_weight);
    get("louvain_shuffle", c.louvain_shuffle);
    get("surrogate_trees", c.surrogate_trees);
    get("surrogate_max_depth", c.surrogate_max_depth);
    get("surrogate_min_leaf", c.surrogate_min_leaf);
    get("surrogate_max_rows", c.surrogate_max_rows);
    get("shap_background", c.shap_background);
    get("shap_sample", c.shap_sample);
    get("histogram_route", c.histogram_route);
    get("histogram_bins", c.histogram_bins);
    get("top_k", c.top_k);
    get("write_plots", c.write_plots);
    get("write_shap_values", c.write_shap_values);
    get("write_timings", c.write_timings);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid configuration snapshot: ") + e.what());
  }
  return c;
}

StageSeeds derive_seeds(const PipelineConfig& config) {
  StageSeeds s;
  s.master = config.seed;
  s.kmeans = config.kmeans_seed.value_or(mix_seed(config.seed, 1));
  s.iforest = config.iforest_seed.value_or(mix_seed(config.seed, 2));
  s.louvain = mix_seed(config.seed, 3);
  s.surrogate = mix_seed(config.seed, 4);
  s.sampling = mix_seed(config.seed, 5);
  return s;
}

std::string RunManifest::to_json() const {
  ordered_json j;
  j["status"] = status;
  if (!failed_stage.empty()) {
    j["failed_stage"] = failed_stage;
    j["error"] = error;
  }
  j["input_checksum_fnv1a64"] = input_checksum;
  j["completed_stages"] = completed_stages;
  j["counts"] = {{"data_lines", counts.data_lines},
                 {"parsed", counts.parsed},
                 {"rejected", counts.rejected},
                 {"cluster_eligible", counts.cluster_eligible},
                 {"priced", counts.priced},
                 {"price_flagged", counts.price_flagged},
                 {"customs_review", counts.customs_review},
                 {"data_quality_review", counts.data_quality_review},
                 {"mega_trades", counts.mega_trades},
                 {"vague", counts.vague},
                 {"case_file_entries", counts.case_file_entries},
                 {"network_nodes", counts.network_nodes},
                 {"communities", counts.communities}};
  j["seeds"] = {{"master", seeds.master},       {"kmeans", seeds.kmeans},
                {"iforest", seeds.iforest},     {"louvain", seeds.louvain},
                {"surrogate", seeds.surrogate}, {"sampling", seeds.sampling}};
  j["warnings"] = warnings;
  j["config"] = config_json.empty() ? ordered_json::object() : ordered_json::parse(config_json);
  return j.dump(2) + "\n";
}

namespace {

// Seeded sample of `k` distinct indices from [0, n), ascending.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (k >= n) return idx;
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

class StageRunner {
 public:
  explicit StageRunner(RunManifest& manifest) : manifest_(manifest) {}

  template <class Fn>
  void run(const std::string& name, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    try {
      fn();
    } catch (const StageError&) {
      throw;
    } catch (const ConfigError& e) {
      throw StageError(name, e.what(), true);
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    manifest_.stage_seconds[name] = elapsed.count();
    manifest_.completed_stages.push_back(name);
  }

 private:
  RunManifest& manifest_;
};

std::optional<reporting::RouteKey> parse_route(const std::string& text) {
  const auto arrow = text.find("->");
  if (arrow == std::string::npos) return std::nullopt;
  return reporting::RouteKey{csv::trim(text.substr(0, arrow)), csv::trim(text.substr(arrow + 2))};
}

}  // namespace

PipelineState run_stages(const std::string& input_text, const PipelineConfig& config,
                         RunManifest& manifest) {
  PipelineState st;
  const StageSeeds seeds = derive_seeds(config);
  manifest.seeds = seeds;
  StageRunner stage(manifest);
  auto& counts = manifest.counts;

  stage.run("ingest", [&] {
    std::istringstream in(input_text);
    st.parsed = ingest::parse_stream(in, config.mapping);
    counts.data_lines = st.parsed.data_lines;
    counts.parsed = st.parsed.records.size();
    counts.rejected = st.parsed.rejects.size();
    if (st.parsed.records.empty()) throw InputError("no valid records after ingestion");
  });
  const auto& records = st.parsed.records;

  stage.run("features", [&] {
    const features::VagueKeywordList keywords(config.vague_keywords);
    st.rows = features::build_feature_rows(records, keywords);
    for (const auto& r : st.rows) {
      if (r.cluster_eligible()) ++counts.cluster_eligible;
      if (r.is_vague) ++counts.vague;
    }
  });

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < st.rows.size(); ++i) {
    if (st.rows[i].cluster_eligible()) eligible.push_back(i);
  }

  stage.run("archetypes", [&] {
    std::vector<Point2> points;
    std::vector<double> lw;
    std::vector<double> lv;
    for (auto i : eligible) {
      points.push_back(st.rows[i].log_point());
      lw.push_back(*st.rows[i].log_weight);
      lv.push_back(*st.rows[i].log_value);
    }
    archetypes::KMeansParams params{config.clusters, seeds.kmeans, config.kmeans_max_iter, config.kmeans_tol};
    auto fit = archetypes::fit_kmeans(points, params);
    st.kmeans = std::move(fit.model);
    st.median_log_weight = median(lw);
    st.median_log_value = median(lv);
    st.archetype_labels = archetypes::label_archetypes(st.kmeans, st.median_log_weight, st.median_log_value);
    st.cluster_ids.assign(records.size(), std::nullopt);
    for (std::size_t k = 0; k < eligible.size(); ++k) st.cluster_ids[eligible[k]] = fit.labels[k];
  });

  stage.run("price_anomaly", [&] {
    st.priced = price_anomaly::priced_rows(records, st.rows);
    st.stats = price_anomaly::group_stats(st.priced, config.iqr_multiplier);
    auto flagged = price_anomaly::detect_price_outliers(st.priced, st.stats, config.min_group_size);
    for (auto& a : flagged) {
      a = price_anomaly::triage(a, records[static_cast<std::size_t>(a.record_id)].net_wgt_kg);
      if (*a.queue == price_anomaly::Queue::CustomsReview) ++counts.customs_review;
      else ++counts.data_quality_review;
    }
    st.anomalies = std::move(flagged);
    counts.priced = st.priced.size();
    counts.price_flagged = st.anomalies.size();
  });

  stage.run("mega_trade", [&] {
    std::vector<Point2> points;
    std::vector<mega_trade::ScoredRow> scored;
    for (auto i : eligible) {
      const Point2 p{*st.rows[i].log_value, *st.rows[i].log_weight};
      points.push_back(p);
      scored.push_back({records[i].record_id, p, records[i].primary_value_usd, records[i].period,
                        records[i].reporter});
    }
    mega_trade::IsolationForestParams params{config.iforest_trees, config.iforest_subsample, seeds.iforest};
    st.iforest = mega_trade::fit_isolation_forest(points, params);
    st.mega_events = mega_trade::detect_mega_trades(scored, st.iforest, config.contamination);
    st.mega_flags.assign(records.size(), 0);
    for (const auto& e : st.mega_events) st.mega_flags[static_cast<std::size_t>(e.record_id)] = 1;
    counts.mega_trades = st.mega_events.size();
  });

  stage.run("risk_engine", [&] {
    st.scores = risk_engine::score_records(records, st.rows, st.stats);
    risk_engine::CaseInputs inputs{records, st.rows, st.scores, st.cluster_ids, st.mega_flags};
    st.case_entries = risk_engine::build_case_file(st.anomalies, inputs);
    st.case_summary = risk_engine::summarize(st.case_entries, st.anomalies);
    counts.case_file_entries = st.case_entries.size();
  });

  // Price outlier (either queue), mega-trade or vague description.
  std::vector<std::uint8_t> anomalous(records.size(), 0);
  for (const auto& a : st.anomalies) anomalous[static_cast<std::size_t>(a.record_id)] = 1;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (st.mega_flags[i] || st.rows[i].is_vague) anomalous[i] = 1;
  }

  stage.run("trade_network", [&] {
    std::vector<TradeRecord> flagged;
    std::set<RecordId> in_case;
    for (const auto& e : st.case_entries) in_case.insert(e.record_id);
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (in_case.contains(records[i].record_id) || st.mega_flags[i] || st.rows[i].is_vague) {
        flagged.push_back(records[i]);
      }
    }
    const std::set<std::string> aggregates(config.aggregate_partners.begin(), config.aggregate_partners.end());
    st.graph = trade_network::build_graph(flagged, aggregates);
    const auto weighting = config.community_weight == "value" ? trade_network::EdgeWeighting::Value
                                                              : trade_network::EdgeWeighting::Count;
    const auto g = trade_network::symmetrize(st.graph, weighting);
    st.communities = trade_network::louvain_partition(g, {seeds.louvain, config.louvain_shuffle});
    const auto bc = trade_network::betweenness(g);

    // Mean composite over scored records touching each node.
    std::vector<double> risk_sum(st.graph.nodes.size(), 0.0);
    std::vector<std::size_t> risk_n(st.graph.nodes.size(), 0);
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!st.scores[i]) continue;
      for (const auto* label : {&records[i].reporter, &records[i].partner}) {
        const int node = st.graph.index_of(*label);
        if (node < 0) continue;
        risk_sum[static_cast<std::size_t>(node)] += st.scores[i]->composite;
        ++risk_n[static_cast<std::size_t>(node)];
        if (records[i].reporter == records[i].partner) break;
      }
    }
    std::vector<double> avg_risk(st.graph.nodes.size(), 0.0);
    for (std::size_t k = 0; k < avg_risk.size(); ++k) {
      if (risk_n[k]) avg_risk[k] = risk_sum[k] / static_cast<double>(risk_n[k]);
    }
    st.centrality = trade_network::transshipment_index(st.graph, bc, avg_risk);
    counts.network_nodes = st.graph.nodes.size();
    counts.communities = static_cast<std::size_t>(st.communities.community_count());
  });

  stage.run("explain", [&] {
    std::vector<std::size_t> usable;
    for (auto i : eligible) {
      if (st.scores[i]) usable.push_back(i);
    }
    if (usable.size() < 10) {
      manifest.warnings.push_back("explain: fewer than 10 scored rows, surrogate forest skipped");
      return;
    }
    const auto train_pick = sample_indices(usable.size(), config.surrogate_max_rows, mix_seed(seeds.sampling, 1));
    explain::FeatureMatrix x;
    std::vector<double> y;
    std::vector<std::size_t> train;
    for (auto k : train_pick) {
      const auto i = usable[k];
      const double row[3] = {st.rows[i].is_vague ? 1.0 : 0.0, *st.rows[i].log_value, *st.rows[i].log_weight};
      x.push_row(row);
      y.push_back(st.scores[i]->composite);
      train.push_back(i);
    }
    explain::ForestParams fp;
    fp.n_trees = config.surrogate_trees;
    fp.max_depth = config.surrogate_max_depth;
    fp.min_leaf = config.surrogate_min_leaf;
    fp.seed = seeds.surrogate;
    st.surrogate = explain::fit_surrogate_forest(x, y, fp);

    explain::FeatureMatrix background;
    for (auto k : sample_indices(train.size(), config.shap_background, mix_seed(seeds.sampling, 2))) {
      background.push_row(x.row(k));
    }
    st.shap_background_rows = background.rows();
    for (auto k : sample_indices(train.size(), config.shap_sample, mix_seed(seeds.sampling, 3))) {
      st.explanations.push_back(explain::shapley_values(*st.surrogate, x.row(k), background,
                                                        records[train[k]].record_id));
    }
    const std::vector<std::string> names(explain::kFeatureNames.begin(), explain::kFeatureNames.end());
    st.shap_ranking = explain::mean_abs_shap_report(st.explanations, names);
  });

  stage.run("trendline", [&] {
    std::vector<trendline::TrendRow> rows;
    for (auto i : eligible) rows.push_back({records[i].hs_code, st.rows[i].log_point()});
    try {
      st.trend = trendline::divergence_report(rows, config.high_risk_hs_codes);
      if (st.trend->small_high_risk_sample) {
        manifest.warnings.push_back("trendline: fewer than 10 high-risk rows");
      }
    } catch (const std::invalid_argument& e) {
      std::vector<Point2> all;
      for (const auto& r : rows) all.push_back(r.point);
      st.trend_all_only = trendline::fit_ols(all);
      manifest.warnings.push_back(std::string("trendline: high-risk fit unavailable: ") + e.what());
    }
  });

  stage.run("reporting", [&] {
    reporting::BundleInputs inputs;
    inputs.view = {records, st.rows, st.scores, st.cluster_ids,
                   anomalous, st.case_entries};
    inputs.mega_events = st.mega_events;
    inputs.priced = st.priced;
    inputs.stats = &st.stats;
    reporting::BundleOptions options;
    options.top_k = config.top_k;
    options.histogram_bins = config.histogram_bins;
    options.histogram_route = parse_route(config.histogram_route);
    options.high_risk_codes = config.high_risk_hs_codes;
    st.bundle = reporting::build_bundle(inputs, options);
    st.bundle.memo_text = reporting::policy_memo(st.bundle, st.case_summary);
  });

  return st;
}

namespace {

std::string archetypes_json(const PipelineState& st) {
  ordered_json j;
  j["k"] = st.kmeans.k;
  j["seed"] = st.kmeans.seed;
  j["inertia"] = st.kmeans.inertia;
  j["iterations_run"] = st.kmeans.iterations_run;
  j["median_log_weight"] = st.median_log_weight;
  j["median_log_value"] = st.median_log_value;
  j["clusters"] = ordered_json::array();
  std::vector<std::size_t> sizes(st.kmeans.centroids.size(), 0);
  for (const auto& c : st.cluster_ids) {
    if (c) ++sizes[static_cast<std::size_t>(*c)];
  }
  for (std::size_t c = 0; c < st.kmeans.centroids.size(); ++c) {
    j["clusters"].push_back({{"cluster_id", c},
                             {"log_weight", st.kmeans.centroids[c].x},
                             {"log_value", st.kmeans.centroids[c].y},
                             {"size", sizes[c]},
                             {"label", st.archetype_labels[c].label}});
  }
  return j.dump(2) + "\n";
}

std::string trend_json(const PipelineState& st) {
  if (st.trend) return trendline::trendlines_json(*st.trend);
  ordered_json j;
  if (st.trend_all_only) {
    j["fit_all"] = {{"population", "All"},
                    {"slope", st.trend_all_only->slope},
                    {"intercept", st.trend_all_only->intercept},
                    {"r_squared", st.trend_all_only->r_squared},
                    {"n", st.trend_all_only->n}};
  }
  j["fit_highrisk"] = nullptr;
  j["slope_divergence"] = nullptr;
  j["fit_general"] = nullptr;
  j["slope_divergence_vs_general"] = nullptr;
  return j.dump(2) + "\n";
}

std::string timings_json(const RunManifest& m) {
  ordered_json j = ordered_json::object();
  for (const auto& stage : m.completed_stages) j[stage] = m.stage_seconds.at(stage);
  return j.dump(2) + "\n";
}

template <class Writer>
void write_with(const std::filesystem::path& path, Writer&& writer) {
  std::ostringstream out;
  writer(out);
  io::write_file(path, out.str());
}

}  // namespace

void write_outputs(const PipelineState& st, const PipelineConfig& config, const RunManifest& manifest,
                   const std::filesystem::path& out_dir) {
  write_with(out_dir / "rejects.csv", [&](std::ostream& o) { ingest::write_rejects_csv(o, st.parsed.rejects); });
  io::write_file(out_dir / "archetypes.json", archetypes_json(st));
  write_with(out_dir / "case_file.csv", [&](std::ostream& o) { risk_engine::write_case_file_csv(o, st.case_entries); });
  io::write_file(out_dir / "case_file_summary.json", risk_engine::case_file_summary_json(st.case_summary));
  write_with(out_dir / "communities.csv",
             [&](std::ostream& o) { trade_network::write_communities_csv(o, st.graph, st.communities); });
  write_with(out_dir / "centrality.csv", [&](std::ostream& o) { trade_network::write_centrality_csv(o, st.centrality); });
  io::write_file(out_dir / "shap_summary.json",
                 explain::shap_summary_json(st.shap_ranking, st.explanations.size(), st.shap_background_rows));
  if (config.write_shap_values) {
    const std::vector<std::string> names(explain::kFeatureNames.begin(), explain::kFeatureNames.end());
    write_with(out_dir / "shap_values.csv",
               [&](std::ostream& o) { explain::write_shap_values_csv(o, st.explanations, names); });
  }
  io::write_file(out_dir / "trendlines.json", trend_json(st));
  reporting::write_reports(st.bundle, out_dir);
  if (config.write_plots) reporting::plot_exports(st.bundle, out_dir);
  io::write_file(out_dir / "manifest.json", manifest.to_json());
  if (config.write_timings) io::write_file(out_dir / "timings.json", timings_json(manifest));
}

RunResult run_pipeline(const PipelineConfig& config) {
  RunResult result;
  result.manifest.config_json = config_to_json(config, false);
  try {
    config.validate();
  } catch (const ConfigError& e) {
    result.exit_code = kConfigError;
    result.manifest.status = "failed";
    result.manifest.error = e.what();
    return result;
  }

  std::string input_text;
  try {
    input_text = io::read_file(config.input);
  } catch (const IoError& e) {
    result.exit_code = kInputError;
    result.manifest.status = "failed";
    result.manifest.error = e.what();
    return result;
  }
  result.manifest.input_checksum = io::fnv1a_hex(input_text);

  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) {
    result.exit_code = kInputError;
    result.manifest.status = "failed";
    result.manifest.error = "cannot create output directory: " + ec.message();
    return result;
  }

  try {
    const auto state = run_stages(input_text, config, result.manifest);
    write_outputs(state, config, result.manifest, config.output_dir);
  } catch (const StageError& e) {
    result.exit_code = e.config_cause() ? kConfigError : kStageFailure;
    result.manifest.status = "failed";
    result.manifest.failed_stage = e.stage();
    result.manifest.error = e.what();
    try {
      io::write_file(config.output_dir / "manifest.json", result.manifest.to_json());
    } catch (const IoError&) {
    }
    return result;
  } catch (const IoError& e) {
    result.exit_code = kInputError;
    result.manifest.status = "failed";
    result.manifest.failed_stage = "write_outputs";
    result.manifest.error = e.what();
    return result;
  }
  return result;
}

}  // namespace tradescan::pipeline
