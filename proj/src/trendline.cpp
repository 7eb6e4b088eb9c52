#include "tradescan/trendline.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "tradescan/errors.hpp"

namespace tradescan::trendline {

TrendlineFit fit_ols(std::span<const Point2> points, Population population) {
  if (points.size() < 2) throw ParameterError("regression needs at least 2 points");
  const double n = static_cast<double>(points.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const auto& p : points) {
    const double dx = p.x - mx;
    const double dy = p.y - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0.0) throw InputError("regression input has zero variance in log_weight");

  TrendlineFit fit;
  fit.population = population;
  fit.n = points.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy <= 0.0) {
    fit.r_squared = 1.0;
  } else {
    double sse = 0.0;
    for (const auto& p : points) {
      const double r = p.y - (fit.intercept + fit.slope * p.x);
      sse += r * r;
    }
    fit.r_squared = 1.0 - sse / syy;
  }
  return fit;
}

std::vector<std::string> default_high_risk_codes() { return {"290377", "290379", "382478", "382499"}; }

bool is_high_risk(const std::string& hs_code, std::span<const std::string> high_risk_codes) {
  const std::string key = hs_code.substr(0, 6);
  return std::find(high_risk_codes.begin(), high_risk_codes.end(), key) != high_risk_codes.end();
}

DivergenceReport divergence_report(std::span<const TrendRow> rows,
                                   std::span<const std::string> high_risk_codes) {
  DivergenceReport report;
  report.high_risk_hs_codes.assign(high_risk_codes.begin(), high_risk_codes.end());
  std::vector<Point2> all;
  std::vector<Point2> high;
  std::vector<Point2> general;
  std::map<std::string, CodeMarker> markers;
  all.reserve(rows.size());
  for (const auto& r : rows) {
    all.push_back(r.point);
    if (!is_high_risk(r.hs_code, high_risk_codes)) {
      general.push_back(r.point);
      continue;
    }
    high.push_back(r.point);
    auto& m = markers[r.hs_code.substr(0, 6)];
    m.hs_code = r.hs_code.substr(0, 6);
    ++m.n;
    m.mean_log_weight += r.point.x;
    m.mean_log_value += r.point.y;
  }
  for (auto& [code, m] : markers) {
    m.mean_log_weight /= static_cast<double>(m.n);
    m.mean_log_value /= static_cast<double>(m.n);
    report.markers.push_back(m);
  }
  report.small_high_risk_sample = high.size() < kMinHighRiskRows;
  report.fit_all = fit_ols(all, Population::All);
  report.fit_highrisk = fit_ols(high, Population::HighRisk);
  report.slope_divergence = report.fit_highrisk.slope - report.fit_all.slope;
  try {
    report.fit_general = fit_ols(general, Population::General);
    report.slope_divergence_vs_general = report.fit_highrisk.slope - report.fit_general->slope;
  } catch (const std::invalid_argument&) {
    // Too few or degenerate general rows; the comparison is simply absent.
  }
  return report;
}

namespace {

nlohmann::ordered_json fit_json(const TrendlineFit& f) {
  const char* name = f.population == Population::All ? "All" : f.population == Population::HighRisk ? "HighRisk" : "General";
  return {{"population", name},
          {"slope", f.slope},
          {"intercept", f.intercept},
          {"r_squared", f.r_squared},
          {"n", f.n}};
}

}  // namespace

std::string trendlines_json(const DivergenceReport& report) {
  nlohmann::ordered_json j;
  j["fit_all"] = fit_json(report.fit_all);
  j["fit_highrisk"] = fit_json(report.fit_highrisk);
  j["slope_divergence"] = report.slope_divergence;
  j["fit_general"] = report.fit_general ? fit_json(*report.fit_general) : nlohmann::ordered_json(nullptr);
  j["slope_divergence_vs_general"] = report.slope_divergence_vs_general
                                         ? nlohmann::ordered_json(*report.slope_divergence_vs_general)
                                         : nlohmann::ordered_json(nullptr);
  j["high_risk_hs_codes"] = report.high_risk_hs_codes;
  j["small_high_risk_sample"] = report.small_high_risk_sample;
  j["markers"] = nlohmann::ordered_json::array();
  for (const auto& m : report.markers) {
    j["markers"].push_back({{"hs_code", m.hs_code},
                            {"n", m.n},
                            {"mean_log_weight", m.mean_log_weight},
                            {"mean_log_value", m.mean_log_value}});
  }
  return j.dump(2) + "\n";
}

}  // namespace tradescan::trendline
