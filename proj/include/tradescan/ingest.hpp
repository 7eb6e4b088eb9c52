#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tradescan/types.hpp"

namespace tradescan::ingest {

struct RawLine {
  std::size_t line_number = 0;  // 1-based physical line in the file
  std::string text;
};

enum class RejectReason { FieldCount, NumericParse, MissingRequired, BadHsCode, EncodingError };

std::string_view to_string(RejectReason reason);
std::optional<RejectReason> reject_reason_from_string(std::string_view text);

struct RejectRecord {
  std::size_t line_number = 0;
  RejectReason reason = RejectReason::FieldCount;
  std::string raw_excerpt;  // first 200 characters of the line

  bool operator==(const RejectRecord&) const = default;
};

// Source column header for each logical field. Defaults follow the UN
// Comtrade bulk export.
struct ColumnMapping {
  std::string period = "period";
  std::string reporter = "reporterDesc";
  std::string partner = "partnerDesc";
  std::string flow = "flowDesc";
  std::string hs_code = "cmdCode";
  std::string description = "cmdDesc";
  std::string value = "primaryValue";
  std::string weight = "netWgt";

  // Throws ConfigError if a header is empty or two fields share a header.
  void validate() const;
};

// Raw text of the eight logical fields of one data line.
struct LogicalFields {
  std::string period;
  std::string reporter;
  std::string partner;
  std::string flow;
  std::string hs_code;
  std::string description;
  std::string value;
  std::string weight;
};

struct ParseResult {
  std::vector<TradeRecord> records;
  std::vector<RejectRecord> rejects;
  std::size_t data_lines = 0;  // non-blank lines after the header
};

// Single pass over newline-delimited CSV text. Never aborts on a bad data
// line; throws IoError on a stream failure and ConfigError when the header
// lacks a mapped column.
ParseResult parse_stream(std::istream& input, const ColumnMapping& mapping);

ParseResult parse_file(const std::filesystem::path& path, const ColumnMapping& mapping);

// Turns raw logical fields into a record, or names the defect.
std::variant<TradeRecord, RejectReason> normalize_record(const LogicalFields& fields,
                                                         RecordId record_id);

// Decimal with optional thousands separators; nullopt unless finite.
std::optional<double> parse_number(std::string_view text);

// "YYYYMM" or "YYYY".
std::optional<Period> parse_period(std::string_view text);

Flow parse_flow(std::string_view text);

// Replaces invalid UTF-8 sequences with U+FFFD. Sets `replaced` when any
// substitution happened.
std::string sanitize_utf8(std::string_view text, bool& replaced);

void write_rejects_csv(std::ostream& out, std::span<const RejectRecord> rejects);

// Serializes records with the mapping's headers; parse_stream on the output
// re-yields the same records.
void write_records_csv(std::ostream& out, std::span<const TradeRecord> records,
                       const ColumnMapping& mapping = {});

}  // namespace tradescan::ingest
