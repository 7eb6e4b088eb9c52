#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace tradescan::csv {

// Splits one comma-delimited line with RFC-4180 quoting ("" escapes a quote
// inside a quoted field). Returns nullopt when quotes do not balance or a
// closing quote is followed by something other than a delimiter.
std::optional<std::vector<std::string>> split_line(std::string_view line);

// Quotes the field when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

// Fixed two-decimal rendering, used for currency totals shown to people.
std::string format_fixed2(double value);

std::string trim(std::string_view text);

std::string to_lower_ascii(std::string_view text);

}  // namespace tradescan::csv
