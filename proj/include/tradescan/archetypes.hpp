#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tradescan/types.hpp"

namespace tradescan::archetypes {

struct KMeansParams {
  int k = 4;
  std::uint64_t seed = 0;
  int max_iter = 300;
  double tol = 1e-6;  // L2 centroid shift
};

struct KMeansModel {
  int k = 0;
  std::vector<Point2> centroids;  // (log_weight, log_value)
  std::uint64_t seed = 0;
  double inertia = 0.0;
  int iterations_run = 0;
  // Inertia after each assignment step, one entry per iteration.
  std::vector<double> inertia_history;
};

struct KMeansFit {
  KMeansModel model;
  std::vector<int> labels;  // cluster per input point, against the final centroids
};

// Lloyd iterations from k-means++ seeding. Throws ParameterError when
// |points| < k or k < 1, InputError on a non-finite point.
KMeansFit fit_kmeans(std::span<const Point2> points, const KMeansParams& params);

// Nearest centroid, ties to the lowest id. Throws InputError on non-finite input.
int assign(const KMeansModel& model, const Point2& point);

struct ArchetypeLabel {
  int cluster_id = 0;
  std::string label;
};

inline constexpr const char* kSpecialty = "Low Weight / High Value (Specialty)";
inline constexpr const char* kBulk = "High Weight / Low Value (Bulk)";
inline constexpr const char* kLowLow = "Low Weight / Low Value";
inline constexpr const char* kHighHigh = "High Weight / High Value";

// Quadrant label per centroid relative to the global medians (>= median is High).
std::vector<ArchetypeLabel> label_archetypes(const KMeansModel& model, double median_log_weight,
                                             double median_log_value);

}  // namespace tradescan::archetypes
