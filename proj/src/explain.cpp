#include "tradescan/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "tradescan/csv.hpp"
#include "tradescan/rng.hpp"

namespace tradescan::explain {

void FeatureMatrix::push_row(std::span<const double> values) {
  if (n_features == 0) n_features = values.size();
  if (values.size() != n_features) throw ParameterError("feature row width mismatch");
  data.insert(data.end(), values.begin(), values.end());
}

double RegressionTree::predict(std::span<const double> x) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].left >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(node)];
    node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(node)].value;
}

bool RegressionTree::uses_feature(int feature) const {
  return std::any_of(nodes.begin(), nodes.end(),
                     [&](const TreeNode& n) { return n.left >= 0 && n.feature == feature; });
}

double SurrogateForest::predict(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(x);
  return sum / static_cast<double>(trees.size());
}

bool SurrogateForest::uses_feature(int feature) const {
  return std::any_of(trees.begin(), trees.end(),
                     [&](const RegressionTree& t) { return t.uses_feature(feature); });
}

namespace {

struct Split {
  bool found = false;
  int feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
  std::size_t left_count = 0;
};

class TreeGrower {
 public:
  TreeGrower(const FeatureMatrix& x, std::span<const double> y, int max_depth, std::size_t min_leaf)
      : x_(x), y_(y), max_depth_(max_depth), min_leaf_(std::max<std::size_t>(min_leaf, 1)) {}

  RegressionTree grow(std::vector<std::size_t> sample) {
    tree_.nodes.clear();
    build(sample, 0);
    return std::move(tree_);
  }

 private:
  int build(std::vector<std::size_t>& idx, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    double sum = 0.0;
    double lo = y_[idx.front()];
    double hi = lo;
    for (std::size_t i : idx) {
      sum += y_[i];
      lo = std::min(lo, y_[i]);
      hi = std::max(hi, y_[i]);
    }
    tree_.nodes[static_cast<std::size_t>(id)].value = sum / static_cast<double>(idx.size());
    tree_.nodes[static_cast<std::size_t>(id)].samples = idx.size();
    if (depth >= max_depth_ || idx.size() < 2 * min_leaf_ || lo == hi) return id;

    const Split split = best_split(idx);
    if (!split.found) return id;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t i : idx) {
      (x_.row(i)[static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right)
          .push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    tree_.nodes[static_cast<std::size_t>(id)].feature = split.feature;
    tree_.nodes[static_cast<std::size_t>(id)].threshold = split.threshold;
    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    tree_.nodes[static_cast<std::size_t>(id)].left = l;
    tree_.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  // Squared-error reduction n_l n_r / n (mean_l - mean_r)^2; first best wins,
  // scanning features in order and thresholds ascending.
  Split best_split(const std::vector<std::size_t>& idx) const {
    Split best;
    const std::size_t n = idx.size();
    std::vector<std::pair<double, double>> pairs(n);  // (feature value, target)
    double total = 0.0;
    for (std::size_t i : idx) total += y_[i];
    for (std::size_t f = 0; f < x_.n_features; ++f) {
      for (std::size_t k = 0; k < n; ++k) pairs[k] = {x_.row(idx[k])[f], y_[idx[k]]};
      std::sort(pairs.begin(), pairs.end());
      double left_sum = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        left_sum += pairs[k].second;
        const std::size_t nl = k + 1;
        const std::size_t nr = n - nl;
        if (pairs[k].first == pairs[k + 1].first) continue;
        if (nl < min_leaf_ || nr < min_leaf_) continue;
        const double ml = left_sum / static_cast<double>(nl);
        const double mr = (total - left_sum) / static_cast<double>(nr);
        const double gain = static_cast<double>(nl) * static_cast<double>(nr) /
                            static_cast<double>(n) * (ml - mr) * (ml - mr);
        if (gain > best.gain) {
          double threshold = pairs[k].first + (pairs[k + 1].first - pairs[k].first) / 2.0;
          if (threshold >= pairs[k + 1].first) threshold = pairs[k].first;
          best = {true, static_cast<int>(f), threshold, gain, nl};
        }
      }
    }
    return best;
  }

  const FeatureMatrix& x_;
  std::span<const double> y_;
  int max_depth_;
  std::size_t min_leaf_;
  RegressionTree tree_;
};

}  // namespace

RegressionTree fit_tree(const FeatureMatrix& features, std::span<const double> targets,
                        std::span<const std::size_t> sample, int max_depth, std::size_t min_leaf) {
  if (sample.empty()) throw ParameterError("cannot fit a tree on an empty sample");
  return TreeGrower(features, targets, max_depth, min_leaf)
      .grow(std::vector<std::size_t>(sample.begin(), sample.end()));
}

SurrogateForest fit_surrogate_forest(const FeatureMatrix& features, std::span<const double> targets,
                                     const ForestParams& params) {
  const std::size_t n = features.rows();
  if (n < 10) throw ParameterError("surrogate forest needs at least 10 rows");
  if (targets.size() != n) throw ParameterError("target count differs from feature rows");
  if (params.n_trees < 1) throw ParameterError("n_trees must be at least 1");
  if (params.max_depth < 0) throw ParameterError("max_depth must be non-negative");

  SurrogateForest forest;
  forest.params = params;
  forest.n_features = features.n_features;
  std::vector<std::size_t> sample(n);
  for (int t = 0; t < params.n_trees; ++t) {
    if (params.bootstrap) {
      Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(t)));
      for (auto& s : sample) s = static_cast<std::size_t>(rng.below(n));
    } else {
      std::iota(sample.begin(), sample.end(), std::size_t{0});
    }
    forest.trees.push_back(fit_tree(features, targets, sample, params.max_depth, params.min_leaf));
  }
  return forest;
}

std::vector<FeatureImportance> mean_abs_shap_report(std::span<const ShapExplanation> explanations,
                                                    std::span<const std::string> feature_names) {
  std::vector<FeatureImportance> out;
  for (const auto& name : feature_names) out.push_back({name, 0.0});
  if (explanations.empty()) return out;
  for (const auto& e : explanations) {
    for (std::size_t i = 0; i < out.size() && i < e.phi.size(); ++i) out[i].mean_abs_phi += std::abs(e.phi[i]);
  }
  for (auto& f : out) f.mean_abs_phi /= static_cast<double>(explanations.size());
  std::stable_sort(out.begin(), out.end(), [](const FeatureImportance& a, const FeatureImportance& b) {
    return a.mean_abs_phi > b.mean_abs_phi;
  });
  return out;
}

std::string shap_summary_json(std::span<const FeatureImportance> ranking, std::size_t explained,
                              std::size_t background_rows) {
  nlohmann::ordered_json j;
  j["explained_rows"] = explained;
  j["background_rows"] = background_rows;
  j["ranking"] = nlohmann::ordered_json::array();
  for (const auto& f : ranking) {
    j["ranking"].push_back({{"feature", f.feature}, {"mean_abs_shap", f.mean_abs_phi}});
  }
  return j.dump(2) + "\n";
}

void write_shap_values_csv(std::ostream& out, std::span<const ShapExplanation> explanations,
                           std::span<const std::string> feature_names) {
  std::vector<std::string> header{"record_id", "baseline", "prediction"};
  for (const auto& f : feature_names) header.push_back("phi_" + f);
  csv::write_row(out, header);
  for (const auto& e : explanations) {
    std::vector<std::string> row{std::to_string(e.record_id), csv::format_double(e.baseline),
                                 csv::format_double(e.prediction)};
    for (double p : e.phi) row.push_back(csv::format_double(p));
    csv::write_row(out, row);
  }
}

}  // namespace tradescan::explain
