#include "tradescan/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "tradescan/csv.hpp"
#include "tradescan/errors.hpp"

namespace tradescan {

std::string Period::to_string() const {
  std::array<char, 16> buf{};
  if (has_month()) {
    std::snprintf(buf.data(), buf.size(), "%04d%02d", year, month);
  } else {
    std::snprintf(buf.data(), buf.size(), "%04d", year);
  }
  return buf.data();
}

std::string_view to_string(Flow flow) {
  switch (flow) {
    case Flow::Import: return "Import";
    case Flow::Export: return "Export";
    case Flow::Other: return "Other";
  }
  return "Other";
}

}  // namespace tradescan

namespace tradescan::ingest {
namespace {

constexpr std::size_t kExcerptChars = 200;
constexpr std::string_view kBom = "\xEF\xBB\xBF";

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

// First `n` code points of valid UTF-8 text.
std::string utf8_prefix(const std::string& text, std::size_t n) {
  std::size_t count = 0;
  std::size_t i = 0;
  while (i < text.size() && count < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (c >= 0xF0) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    i += len;
    ++count;
  }
  return text.substr(0, std::min(i, text.size()));
}

struct ColumnIndex {
  std::array<std::size_t, 8> index{};
};

ColumnIndex resolve_columns(const std::vector<std::string>& header, const ColumnMapping& mapping) {
  const std::array<const std::string*, 8> wanted = {
      &mapping.period, &mapping.reporter, &mapping.partner, &mapping.flow,
      &mapping.hs_code, &mapping.description, &mapping.value, &mapping.weight};
  ColumnIndex out;
  for (std::size_t f = 0; f < wanted.size(); ++f) {
    auto it = std::find_if(header.begin(), header.end(),
                           [&](const std::string& h) { return csv::trim(h) == *wanted[f]; });
    if (it == header.end()) {
      throw ConfigError("input header has no column '" + *wanted[f] + "'");
    }
    out.index[f] = static_cast<std::size_t>(it - header.begin());
  }
  return out;
}

}  // namespace

std::string_view to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::FieldCount: return "FieldCount";
    case RejectReason::NumericParse: return "NumericParse";
    case RejectReason::MissingRequired: return "MissingRequired";
    case RejectReason::BadHsCode: return "BadHsCode";
    case RejectReason::EncodingError: return "EncodingError";
  }
  return "FieldCount";
}

std::optional<RejectReason> reject_reason_from_string(std::string_view text) {
  for (auto r : {RejectReason::FieldCount, RejectReason::NumericParse, RejectReason::MissingRequired,
                 RejectReason::BadHsCode, RejectReason::EncodingError}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

void ColumnMapping::validate() const {
  const std::array<std::pair<std::string_view, const std::string*>, 8> fields = {{
      {"period", &period}, {"reporter", &reporter}, {"partner", &partner}, {"flow", &flow},
      {"hs_code", &hs_code}, {"description", &description}, {"value", &value}, {"weight", &weight}}};
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].second->empty()) {
      throw ConfigError("column mapping for '" + std::string(fields[i].first) + "' is empty");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (*fields[i].second == *fields[j].second) {
        throw ConfigError("column '" + *fields[i].second + "' mapped to both '" +
                          std::string(fields[j].first) + "' and '" + std::string(fields[i].first) +
                          "'");
      }
    }
  }
}

std::optional<double> parse_number(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char c : csv::trim(text)) {
    if (c != ',') cleaned.push_back(c);
  }
  if (cleaned.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = cleaned.data();
  const char* last = cleaned.data() + cleaned.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::optional<Period> parse_period(std::string_view text) {
  const std::string t = csv::trim(text);
  if (!all_digits(t)) return std::nullopt;
  if (t.size() == 4) return Period{std::stoi(t), 0};
  if (t.size() == 6) {
    const int month = std::stoi(t.substr(4));
    if (month < 1 || month > 12) return std::nullopt;
    return Period{std::stoi(t.substr(0, 4)), month};
  }
  return std::nullopt;
}

Flow parse_flow(std::string_view text) {
  const std::string t = csv::to_lower_ascii(csv::trim(text));
  if (t == "import" || t == "m") return Flow::Import;
  if (t == "export" || t == "x") return Flow::Export;
  return Flow::Other;
}

std::string sanitize_utf8(std::string_view text, bool& replaced) {
  constexpr std::string_view kReplacement = "\xEF\xBF\xBD";
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
      ++i;
      continue;
    }
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c >= 0xC2 && c <= 0xDF) { len = 2; cp = c & 0x1F; }
    else if (c >= 0xE0 && c <= 0xEF) { len = 3; cp = c & 0x0F; }
    else if (c >= 0xF0 && c <= 0xF4) { len = 4; cp = c & 0x07; }
    bool ok = len != 0 && i + len <= n;
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) ok = false;
      else cp = (cp << 6) | (cc & 0x3F);
    }
    if (ok) {
      // Overlong forms, surrogates and values past U+10FFFF.
      if ((len == 3 && cp < 0x800) || (len == 4 && (cp < 0x10000 || cp > 0x10FFFF)) ||
          (cp >= 0xD800 && cp <= 0xDFFF)) {
        ok = false;
      }
    }
    if (ok) {
      out.append(text.substr(i, len));
      i += len;
    } else {
      out.append(kReplacement);
      replaced = true;
      ++i;
    }
  }
  return out;
}

std::variant<TradeRecord, RejectReason> normalize_record(const LogicalFields& fields,
                                                         RecordId record_id) {
  TradeRecord rec;
  rec.record_id = record_id;
  rec.reporter = csv::trim(fields.reporter);
  rec.partner = csv::trim(fields.partner);
  rec.hs_code = csv::trim(fields.hs_code);
  rec.description = csv::trim(fields.description);
  rec.flow = parse_flow(fields.flow);

  if (rec.reporter.empty() || rec.partner.empty() || rec.hs_code.empty() ||
      csv::trim(fields.period).empty() || csv::trim(fields.value).empty()) {
    return RejectReason::MissingRequired;
  }
  const auto period = parse_period(fields.period);
  if (!period) return RejectReason::NumericParse;
  rec.period = *period;

  if (!all_digits(rec.hs_code) || rec.hs_code.size() < 2 || rec.hs_code.size() > 10) {
    return RejectReason::BadHsCode;
  }

  const auto value = parse_number(fields.value);
  if (!value || *value < 0.0) return RejectReason::NumericParse;
  rec.primary_value_usd = *value + 0.0;  // folds -0 into +0

  if (csv::trim(fields.weight).empty()) {
    rec.net_wgt_kg = 0.0;
  } else {
    const auto weight = parse_number(fields.weight);
    if (!weight || *weight < 0.0) return RejectReason::NumericParse;
    rec.net_wgt_kg = *weight + 0.0;
  }
  return rec;
}

ParseResult parse_stream(std::istream& input, const ColumnMapping& mapping) {
  mapping.validate();
  if (!input.good()) throw IoError("input stream is not readable");

  ParseResult result;
  std::string line;
  std::size_t line_number = 0;
  std::optional<ColumnIndex> columns;
  std::size_t header_width = 0;
  RecordId next_id = 0;

  const auto reject = [&](RejectReason reason, const std::string& raw) {
    bool ignored = false;
    result.rejects.push_back(
        {line_number, reason, utf8_prefix(sanitize_utf8(raw, ignored), kExcerptChars)});
  };

  while (std::getline(input, line)) {
    ++line_number;
    if (line_number == 1 && line.starts_with(kBom)) line.erase(0, kBom.size());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;

    if (!columns) {
      bool replaced = false;
      const auto header = csv::split_line(sanitize_utf8(line, replaced));
      if (!header) throw ConfigError("header line has unbalanced quotes");
      columns = resolve_columns(*header, mapping);
      header_width = header->size();
      continue;
    }

    ++result.data_lines;
    const auto split = csv::split_line(line);
    if (!split || split->size() != header_width) {
      reject(RejectReason::FieldCount, line);
      continue;
    }

    // Indices follow the LogicalFields declaration order.
    std::array<std::string, 8> text;
    std::array<bool, 8> replaced{};
    for (std::size_t f = 0; f < 8; ++f) {
      text[f] = sanitize_utf8((*split)[columns->index[f]], replaced[f]);
    }
    // period, hs_code, value, weight carry numbers.
    if (replaced[0] || replaced[4] || replaced[6] || replaced[7]) {
      reject(RejectReason::EncodingError, line);
      continue;
    }

    LogicalFields fields{text[0], text[1], text[2], text[3], text[4], text[5], text[6], text[7]};
    auto normalized = normalize_record(fields, next_id);
    if (auto* rec = std::get_if<TradeRecord>(&normalized)) {
      result.records.push_back(std::move(*rec));
      ++next_id;
    } else {
      reject(std::get<RejectReason>(normalized), line);
    }
  }
  if (input.bad()) throw IoError("read failure after line " + std::to_string(line_number));
  if (!columns) throw ConfigError("input has no header line");
  return result;
}

ParseResult parse_file(const std::filesystem::path& path, const ColumnMapping& mapping) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open input file '" + path.string() + "'");
  return parse_stream(in, mapping);
}

void write_rejects_csv(std::ostream& out, std::span<const RejectRecord> rejects) {
  csv::write_row(out, {"line_number", "reason", "raw_excerpt"});
  for (const auto& r : rejects) {
    csv::write_row(out, {std::to_string(r.line_number), std::string(to_string(r.reason)),
                         r.raw_excerpt});
  }
}

void write_records_csv(std::ostream& out, std::span<const TradeRecord> records,
                       const ColumnMapping& mapping) {
  csv::write_row(out, {mapping.period, mapping.reporter, mapping.partner, mapping.flow,
                       mapping.hs_code, mapping.description, mapping.value, mapping.weight});
  for (const auto& r : records) {
    csv::write_row(out, {r.period.to_string(), r.reporter, r.partner, std::string(to_string(r.flow)),
                         r.hs_code, r.description, csv::format_double(r.primary_value_usd),
                         csv::format_double(r.net_wgt_kg)});
  }
}

}  // namespace tradescan::ingest
