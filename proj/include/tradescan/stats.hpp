#pragma once

#include <span>
#include <vector>

namespace tradescan {

// Linear interpolation at position (n-1)*q of an ascending sequence.
double quantile_sorted(std::span<const double> sorted, double q);

// Copies, sorts and interpolates.
double quantile(std::span<const double> values, double q);

double median(std::span<const double> values);

// Median absolute deviation around the median, unscaled.
double median_abs_deviation(std::span<const double> values);

}  // namespace tradescan
