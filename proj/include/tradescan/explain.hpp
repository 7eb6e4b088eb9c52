#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tradescan/errors.hpp"
#include "tradescan/types.hpp"

namespace tradescan::explain {

// Surrogate feature order.
inline constexpr std::array<const char*, 3> kFeatureNames = {"is_vague", "log_value", "log_weight"};
inline constexpr std::size_t kMaxShapFeatures = 12;

struct TreeNode {
  int left = -1;  // internal when >= 0
  int right = -1;
  int feature = 0;
  double threshold = 0.0;  // x[feature] <= threshold goes left
  double value = 0.0;      // mean target of the training rows at this node
  std::size_t samples = 0;
};

class RegressionTree {
 public:
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
  // True when some internal node splits on `feature`.
  bool uses_feature(int feature) const;
};

struct ForestParams {
  int n_trees = 20;
  int max_depth = 6;
  std::size_t min_leaf = 5;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

// Row-major dense feature matrix.
struct FeatureMatrix {
  std::size_t n_features = 0;
  std::vector<double> data;

  std::size_t rows() const { return n_features == 0 ? 0 : data.size() / n_features; }
  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * n_features, n_features};
  }
  void push_row(std::span<const double> values);
};

class SurrogateForest {
 public:
  ForestParams params;
  std::size_t n_features = 0;
  std::vector<RegressionTree> trees;

  double predict(std::span<const double> x) const;
  bool uses_feature(int feature) const;
};

// Bagged squared-error regression trees. Throws ParameterError with fewer
// than 10 rows or mismatched sizes.
SurrogateForest fit_surrogate_forest(const FeatureMatrix& features, std::span<const double> targets,
                                     const ForestParams& params);

RegressionTree fit_tree(const FeatureMatrix& features, std::span<const double> targets,
                        std::span<const std::size_t> sample, int max_depth, std::size_t min_leaf);

struct ShapExplanation {
  RecordId record_id = 0;
  double baseline = 0.0;    // mean prediction over the background
  double prediction = 0.0;  // model(x)
  std::vector<double> phi;
};

// Exact interventional Shapley values by enumerating all coalitions:
// v(S) = mean_b model(x_S, b_rest). Works with any callable
// double(std::span<const double>).
template <class Model>
ShapExplanation shapley_values(const Model& model, std::span<const double> x,
                               const FeatureMatrix& background, RecordId record_id = 0) {
  const std::size_t f = x.size();
  if (f > kMaxShapFeatures) throw ParameterError("exact Shapley enumeration limited to 12 features");
  if (background.rows() == 0) throw ParameterError("Shapley background sample is empty");
  if (background.n_features != f) throw ParameterError("background width differs from x");

  const std::size_t coalitions = std::size_t{1} << f;
  std::vector<double> v(coalitions, 0.0);
  std::vector<double> hybrid(f);
  for (std::size_t mask = 0; mask < coalitions; ++mask) {
    double sum = 0.0;
    for (std::size_t b = 0; b < background.rows(); ++b) {
      const auto row = background.row(b);
      for (std::size_t j = 0; j < f; ++j) hybrid[j] = (mask >> j & 1U) ? x[j] : row[j];
      sum += model(std::span<const double>(hybrid));
    }
    v[mask] = sum / static_cast<double>(background.rows());
  }

  // |S|! (f - |S| - 1)! / f!
  std::vector<double> weight(f, 0.0);
  for (std::size_t s = 0; s < f; ++s) {
    double w = 1.0;
    for (std::size_t k = 1; k <= s; ++k) w *= static_cast<double>(k);
    for (std::size_t k = 1; k <= f - s - 1; ++k) w *= static_cast<double>(k);
    for (std::size_t k = 1; k <= f; ++k) w /= static_cast<double>(k);
    weight[s] = w;
  }

  ShapExplanation out;
  out.record_id = record_id;
  out.baseline = v[0];
  out.prediction = v[coalitions - 1];
  out.phi.assign(f, 0.0);
  for (std::size_t i = 0; i < f; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    for (std::size_t mask = 0; mask < coalitions; ++mask) {
      if (mask & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(mask));
      out.phi[i] += weight[size] * (v[mask | bit] - v[mask]);
    }
  }
  return out;
}

inline ShapExplanation shapley_values(const SurrogateForest& forest, std::span<const double> x,
                                      const FeatureMatrix& background, RecordId record_id = 0) {
  return shapley_values([&](std::span<const double> z) { return forest.predict(z); }, x,
                        background, record_id);
}

struct FeatureImportance {
  std::string feature;
  double mean_abs_phi = 0.0;
};

// Mean |phi| per feature, descending; ties keep feature order.
std::vector<FeatureImportance> mean_abs_shap_report(std::span<const ShapExplanation> explanations,
                                                    std::span<const std::string> feature_names);

std::string shap_summary_json(std::span<const FeatureImportance> ranking, std::size_t explained,
                              std::size_t background_rows);

void write_shap_values_csv(std::ostream& out, std::span<const ShapExplanation> explanations,
                           std::span<const std::string> feature_names);

}  // namespace tradescan::explain
