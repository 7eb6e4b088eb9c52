#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>

namespace tradescan {

using RecordId = std::int64_t;

// Calendar month. month == 0 marks annual data.
struct Period {
  int year = 0;
  int month = 0;

  bool has_month() const { return month != 0; }
  // Months since year 0; only meaningful when has_month().
  int ordinal() const { return year * 12 + (month - 1); }
  static Period from_ordinal(int ordinal) { return {ordinal / 12, ordinal % 12 + 1}; }

  // "YYYYMM", or "YYYY" for annual periods.
  std::string to_string() const;

  auto operator<=>(const Period&) const = default;
};

enum class Flow { Import, Export, Other };

std::string_view to_string(Flow flow);

struct TradeRecord {
  RecordId record_id = 0;
  Period period;
  std::string reporter;
  std::string partner;
  Flow flow = Flow::Other;
  std::string hs_code;
  std::string description;
  double primary_value_usd = 0.0;
  double net_wgt_kg = 0.0;

  bool operator==(const TradeRecord&) const = default;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

inline double squared_distance(const Point2& a, const Point2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

}  // namespace tradescan
