#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tradescan/types.hpp"

namespace tradescan::trendline {

enum class Population { All, HighRisk, General };

struct TrendlineFit {
  Population population = Population::All;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n = 0;
};

// Least squares of y on x for (log_weight, log_value) points. Throws
// ParameterError below 2 points and InputError when x has no variance.
TrendlineFit fit_ols(std::span<const Point2> points, Population population = Population::All);

// Default high-risk codes from the labelled markers of the trendline figure.
std::vector<std::string> default_high_risk_codes();

// Membership by the first six digits of the record's HS code.
bool is_high_risk(const std::string& hs_code, std::span<const std::string> high_risk_codes);

struct CodeMarker {
  std::string hs_code;  // six-digit code from the list
  std::size_t n = 0;
  double mean_log_weight = 0.0;
  double mean_log_value = 0.0;
};

struct TrendRow {
  std::string hs_code;
  Point2 point;  // (log_weight, log_value)
};

inline constexpr std::size_t kMinHighRiskRows = 10;

struct DivergenceReport {
  TrendlineFit fit_all;
  TrendlineFit fit_highrisk;
  double slope_divergence = 0.0;  // high-risk slope minus overall slope
  // Rows outside the high-risk list; absent when they cannot be fitted.
  std::optional<TrendlineFit> fit_general;
  std::optional<double> slope_divergence_vs_general;
  std::vector<std::string> high_risk_hs_codes;
  std::vector<CodeMarker> markers;
  bool small_high_risk_sample = false;  // fewer than kMinHighRiskRows high-risk rows
};

// Throws like fit_ols when either population is unusable.
DivergenceReport divergence_report(std::span<const TrendRow> rows,
                                   std::span<const std::string> high_risk_codes);

std::string trendlines_json(const DivergenceReport& report);

}  // namespace tradescan::trendline
