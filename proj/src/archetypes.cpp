#include "tradescan/archetypes.hpp"

#include <cmath>
#include <limits>

#include "tradescan/errors.hpp"
#include "tradescan/rng.hpp"

namespace tradescan::archetypes {
namespace {

bool finite(const Point2& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

int nearest(std::span<const Point2> centroids, const Point2& p, double* dist_out = nullptr) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(centroids[c], p);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (dist_out) *dist_out = best_d;
  return best;
}

std::vector<Point2> seed_plus_plus(std::span<const Point2> points, int k, Rng& rng) {
  std::vector<Point2> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  centroids.push_back(points[rng.below(points.size())]);
  std::vector<double> d2(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) d2[i] = squared_distance(points[i], centroids[0]);

  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = rng.below(points.size());
    } else {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = points.size() - 1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < points.size(); ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
    }
  }
  return centroids;
}

// Returns the inertia of the assignment.
double assign_all(std::span<const Point2> points, std::span<const Point2> centroids,
                  std::vector<int>& labels, std::vector<double>& dist) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    labels[i] = nearest(centroids, points[i], &dist[i]);
    inertia += dist[i];
  }
  return inertia;
}

}  // namespace

KMeansFit fit_kmeans(std::span<const Point2> points, const KMeansParams& params) {
  if (params.k < 1) throw ParameterError("k must be at least 1");
  if (points.size() < static_cast<std::size_t>(params.k)) {
    throw ParameterError("k-means needs at least k points (k=" + std::to_string(params.k) +
                         ", points=" + std::to_string(points.size()) + ")");
  }
  if (params.max_iter < 1) throw ParameterError("max_iter must be at least 1");
  for (const auto& p : points) {
    if (!finite(p)) throw InputError("k-means input contains a non-finite point");
  }

  const auto k = static_cast<std::size_t>(params.k);
  Rng rng(params.seed);
  KMeansFit fit;
  fit.model.k = params.k;
  fit.model.seed = params.seed;
  std::vector<Point2> centroids = seed_plus_plus(points, params.k, rng);

  std::vector<int> labels(points.size(), -1);
  std::vector<int> previous;
  std::vector<double> dist(points.size());

  int iter = 0;
  while (iter < params.max_iter) {
    ++iter;
    previous = labels;
    double inertia = assign_all(points, centroids, labels, dist);

    // Repair empty clusters with the point farthest from its centroid.
    std::vector<std::size_t> counts(k, 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (counts[static_cast<std::size_t>(labels[i])] > 1 && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      }
      --counts[static_cast<std::size_t>(labels[far])];
      labels[far] = static_cast<int>(c);
      counts[c] = 1;
      inertia -= dist[far];
      dist[far] = 0.0;
      centroids[c] = points[far];
    }
    fit.model.inertia_history.push_back(inertia);

    if (labels == previous) break;

    std::vector<Point2> sums(k);
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto& s = sums[static_cast<std::size_t>(labels[i])];
      s.x += points[i].x;
      s.y += points[i].y;
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double n = static_cast<double>(counts[c]);
      const Point2 updated{sums[c].x / n, sums[c].y / n};
      shift = std::max(shift, std::sqrt(squared_distance(updated, centroids[c])));
      centroids[c] = updated;
    }
    if (shift < params.tol) break;
  }

  fit.model.centroids = std::move(centroids);
  fit.model.iterations_run = iter;
  fit.model.inertia = assign_all(points, fit.model.centroids, labels, dist);
  fit.labels = std::move(labels);
  return fit;
}

int assign(const KMeansModel& model, const Point2& point) {
  if (!finite(point)) throw InputError("cannot assign a non-finite point");
  if (model.centroids.empty()) throw ParameterError("k-means model is not fitted");
  return nearest(model.centroids, point);
}

std::vector<ArchetypeLabel> label_archetypes(const KMeansModel& model, double median_log_weight,
                                             double median_log_value) {
  std::vector<ArchetypeLabel> labels;
  for (std::size_t c = 0; c < model.centroids.size(); ++c) {
    const bool heavy = model.centroids[c].x >= median_log_weight;
    const bool valuable = model.centroids[c].y >= median_log_value;
    const char* name = heavy ? (valuable ? kHighHigh : kBulk) : (valuable ? kSpecialty : kLowLow);
    labels.push_back({static_cast<int>(c), name});
  }
  return labels;
}

}  // namespace tradescan::archetypes
