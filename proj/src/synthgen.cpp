#include "tradescan/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tradescan/csv.hpp"
#include "tradescan/errors.hpp"
#include "tradescan/features.hpp"
#include "tradescan/price_anomaly.hpp"
#include "tradescan/rng.hpp"
#include "tradescan/trendline.hpp"

namespace tradescan::synthgen {
namespace {

struct Commodity {
  const char* code;
  const char* description;
  double log_price;  // log10 USD/kg at the group centre
  bool high_risk;
};

constexpr Commodity kCommodities[] = {
    {"290311", "Chloromethane (methyl chloride) and chloroethane", 0.30, false},
    {"290312", "Dichloromethane (methylene chloride)", 0.45, false},
    {"290313", "Chloroform (trichloromethane)", 0.55, false},
    {"290314", "Carbon tetrachloride", 0.80, false},
    {"290321", "Vinyl chloride (chloroethylene)", 0.25, false},
    {"290322", "Trichloroethylene", 0.60, false},
    {"290323", "Tetrachloroethylene (perchloroethylene)", 0.65, false},
    {"290371", "Chlorodifluoromethane (HCFC-22), 99.9% pure", 0.90, false},
    {"290372", "Dichlorotrifluoroethanes (HCFC-123)", 1.10, false},
    {"290376", "Bromochlorodifluoromethane (Halon-1211)", 1.30, false},
    {"290377", "Chlorofluorocarbons, fully substituted (CFC-11, CFC-12)", 1.20, true},
    {"290379", "Hydrochlorofluorocarbons, other (HCFC-141b)", 1.00, true},
    {"382478", "Refrigerant blend R-404A (HFC-125/143a/134a)", 1.40, true},
    {"382499", "Fluorinated chemical preparations for refrigeration", 1.50, true},
};
constexpr std::size_t kCommodityCount = std::size(kCommodities);

// Log10 weight ranges; the narrower high-risk range keeps the slope term
// from producing natural Tukey outliers in price.
constexpr double kGeneralLogWeightLo = 1.0;
constexpr double kGeneralLogWeightHi = 4.0;
constexpr double kHighRiskLogWeightLo = 2.0;
constexpr double kHighRiskLogWeightHi = 3.0;
constexpr double kGeneralNoise = 0.2;
constexpr double kHighRiskNoise = 0.1;
constexpr double kOutlierIqrs = 8.0;
constexpr double kMegaSigmas = 8.5;
constexpr double kWorldShare = 0.03;

const std::vector<std::vector<std::string>>& default_blocks() {
  static const std::vector<std::vector<std::string>> blocks = {
      {"USA", "Canada", "Mexico", "Brazil", "Colombia"},
      {"China", "Malaysia", "Singapore", "Thailand", "Viet Nam"},
      {"Germany", "Netherlands", "France", "Italy", "Spain"},
  };
  return blocks;
}

struct Draft {
  Period period;
  std::string reporter;
  std::string partner;
  Flow flow = Flow::Import;
  std::size_t commodity = 0;
  std::string description;
  double log_weight = 0.0;
  double log_price = 0.0;
  double value = 0.0;
  double weight = 0.0;
  bool thousands = false;
};

double round_to(double v, double unit) { return std::round(v / unit) * unit; }

std::string format_value(double v, bool thousands) {
  std::string text = csv::format_fixed2(v);
  if (!thousands) return text;
  const auto dot = text.find('.');
  std::string head = text.substr(0, dot);
  std::string grouped;
  for (std::size_t i = 0; i < head.size(); ++i) {
    if (i && (head.size() - i) % 3 == 0) grouped.push_back(',');
    grouped.push_back(head[i]);
  }
  return grouped + text.substr(dot);
}

std::vector<std::string> line_fields(const Draft& d) {
  return {"M",
          d.period.to_string(),
          d.reporter,
          d.partner,
          std::string(to_string(d.flow)),
          kCommodities[d.commodity].code,
          d.description,
          csv::format_double(d.weight),
          format_value(d.value, d.thousands)};
}

std::string join_line(const std::vector<std::string>& fields) {
  std::ostringstream out;
  csv::write_row(out, fields);
  return out.str();
}

std::string defect_line(Draft d, ingest::RejectReason reason) {
  using ingest::RejectReason;
  d.thousands = false;
  auto fields = line_fields(d);
  switch (reason) {
    case RejectReason::FieldCount:
      fields.pop_back();
      break;
    case RejectReason::NumericParse:
      fields[8] = "-" + fields[8];
      break;
    case RejectReason::MissingRequired:
      fields[2].clear();
      break;
    case RejectReason::BadHsCode:
      fields[5] = "29O3X1";
      break;
    case RejectReason::EncodingError:
      fields[8] = "12\xFF" "34";
      break;
  }
  return join_line(fields);
}

}  // namespace

std::vector<std::string> generator_hs_codes() {
  std::vector<std::string> out;
  for (const auto& c : kCommodities) out.emplace_back(c.code);
  return out;
}

SynthDataset generate_dataset(const PlantSpec& spec) {
  if (!(spec.defect_rate >= 0.0 && spec.defect_rate < 1.0)) {
    throw ParameterError("defect_rate must lie in [0, 1)");
  }
  const auto& blocks = spec.community_blocks.empty() ? default_blocks() : spec.community_blocks;
  std::vector<std::string> countries;
  for (const auto& b : blocks) {
    if (b.size() < 2) throw ParameterError("each community block needs at least two countries");
    countries.insert(countries.end(), b.begin(), b.end());
  }
  if (blocks.size() < 2) throw ParameterError("at least two community blocks are required");

  const auto n_defects = static_cast<std::size_t>(
      std::llround(spec.defect_rate * static_cast<double>(spec.n_records)));
  const std::size_t n_valid = spec.n_records - n_defects;
  if (spec.n_price_outliers + spec.n_vague + spec.n_mega_trades > n_valid) {
    throw ParameterError("planted record counts exceed the number of valid records");
  }
  if (spec.n_price_outliers > 0 && n_valid < 20 * kCommodityCount) {
    throw ParameterError("price outlier plants need at least 20 records per HS group");
  }

  const std::vector<std::string> keywords =
      spec.vague_keywords.empty() ? features::VagueKeywordList().keywords()
                                  : features::VagueKeywordList(spec.vague_keywords).keywords();

  Rng rng(spec.seed);
  GroundTruth truth;
  truth.n_records = spec.n_records;
  truth.n_valid = n_valid;
  truth.seed = spec.seed;
  truth.general_slope = spec.general_slope;
  truth.high_risk_slope = spec.high_risk_slope;
  truth.mega_month = spec.mega_month;
  truth.dominant_route = {blocks[1][std::min<std::size_t>(1, blocks[1].size() - 1)], blocks[0][0]};
  truth.mega_reporter = blocks[0][0];
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (const auto& c : blocks[b]) truth.community[c] = static_cast<int>(b);
  }

  const auto block_of = [&](const std::string& c) { return truth.community.at(c); };
  const auto draw_record = [&](Draft& d) {
    d.period = Period{2020 + static_cast<int>(rng.below(3)), 1 + static_cast<int>(rng.below(12))};
    d.reporter = countries[rng.below(countries.size())];
    if (rng.uniform() < kWorldShare) {
      d.partner = "World";
    } else {
      const int home = block_of(d.reporter);
      const bool intra = rng.uniform() < spec.intra_block_bias;
      std::vector<const std::string*> pool;
      for (const auto& c : countries) {
        if (c != d.reporter && (block_of(c) == home) == intra) pool.push_back(&c);
      }
      d.partner = *pool[rng.below(pool.size())];
    }
    d.flow = rng.uniform() < 0.5 ? Flow::Import : Flow::Export;
    d.commodity = static_cast<std::size_t>(rng.below(kCommodityCount));
    const auto& c = kCommodities[d.commodity];
    d.description = c.description;
    if (c.high_risk) {
      d.log_weight = rng.uniform(kHighRiskLogWeightLo, kHighRiskLogWeightHi);
      const double centre = (kHighRiskLogWeightLo + kHighRiskLogWeightHi) / 2.0;
      d.log_price = c.log_price + (spec.high_risk_slope - 1.0) * (d.log_weight - centre) +
                    rng.uniform(-kHighRiskNoise, kHighRiskNoise);
    } else {
      d.log_weight = rng.uniform(kGeneralLogWeightLo, kGeneralLogWeightHi);
      const double centre = (kGeneralLogWeightLo + kGeneralLogWeightHi) / 2.0;
      d.log_price = c.log_price + (spec.general_slope - 1.0) * (d.log_weight - centre) +
                    rng.uniform(-kGeneralNoise, kGeneralNoise);
    }
    d.thousands = rng.uniform() < 0.1;
  };

  // Slot positions of malformed lines.
  std::vector<std::size_t> slots(spec.n_records);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  rng.shuffle(slots);
  std::vector<std::size_t> defect_slots(slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(n_defects));
  std::sort(defect_slots.begin(), defect_slots.end());

  std::vector<Draft> drafts(n_valid);
  for (auto& d : drafts) draw_record(d);

  // Disjoint plant sets.
  std::vector<std::size_t> order(n_valid);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  auto cursor = order.begin();
  const auto take = [&](std::size_t n) {
    std::vector<std::size_t> out(cursor, cursor + static_cast<std::ptrdiff_t>(n));
    cursor += static_cast<std::ptrdiff_t>(n);
    std::sort(out.begin(), out.end());
    return out;
  };
  const auto outliers = take(spec.n_price_outliers);
  const auto vague = take(spec.n_vague);
  const auto mega = take(spec.n_mega_trades);
  std::set<std::size_t> planted_outlier(outliers.begin(), outliers.end());

  // Vague plants keep their numbers but carry catch-all wording.
  for (std::size_t i = 0; i < vague.size(); ++i) {
    auto& d = drafts[vague[i]];
    d.description = "Chemical preparations, " + keywords[i % keywords.size()] + " (" +
                    kCommodities[d.commodity].code + ")";
  }

  // Mega-trades sit far beyond the weight range at the group's centre price.
  const double general_sigma = (kGeneralLogWeightHi - kGeneralLogWeightLo) / std::sqrt(12.0);
  for (auto i : mega) {
    auto& d = drafts[i];
    d.period = spec.mega_month;
    d.reporter = truth.mega_reporter;
    if (d.partner == d.reporter || d.partner == "World") d.partner = blocks[1][0];
    d.log_weight = (kGeneralLogWeightLo + kGeneralLogWeightHi) / 2.0 + kMegaSigmas * general_sigma;
    d.log_price = kCommodities[d.commodity].log_price;
  }

  for (auto& d : drafts) {
    d.weight = round_to(std::pow(10.0, d.log_weight), 0.001);
    d.value = round_to(d.weight * std::pow(10.0, d.log_price), 0.01);
  }

  // Price outliers: kOutlierIqrs group IQRs above the median of the
  // unplanted members.
  std::map<std::size_t, std::vector<double>> base_prices;
  for (std::size_t i = 0; i < n_valid; ++i) {
    if (!planted_outlier.contains(i)) base_prices[drafts[i].commodity].push_back(drafts[i].value / drafts[i].weight);
  }
  const auto dominant_count = static_cast<std::size_t>(
      std::llround(spec.dominant_route_share * static_cast<double>(outliers.size())));
  for (std::size_t k = 0; k < outliers.size(); ++k) {
    auto& d = drafts[outliers[k]];
    const auto s = price_anomaly::summarize("", base_prices[d.commodity]);
    const double price = s.median + kOutlierIqrs * s.iqr;
    d.value = round_to(d.weight * price, 0.01);
    if (k < dominant_count) {
      d.reporter = truth.dominant_route.first;
      d.partner = truth.dominant_route.second;
    }
  }

  // Every planted outlier must sit outside the final fences, at least five
  // IQRs from its group median.
  {
    std::map<std::size_t, std::vector<double>> prices;
    for (const auto& d : drafts) prices[d.commodity].push_back(d.value / d.weight);
    for (auto i : outliers) {
      const auto& d = drafts[i];
      const auto s = price_anomaly::summarize("", prices[d.commodity]);
      const double p = d.value / d.weight;
      if (!(p > s.upper_fence) || p - s.median < 5.0 * s.iqr) {
        throw std::logic_error("planted price outlier is not outside its group's fences");
      }
    }
  }

  // Emit lines.
  std::ostringstream out;
  csv::write_row(out, {"freqCode", "period", "reporterDesc", "partnerDesc", "flowDesc", "cmdCode",
                       "cmdDesc", "netWgt", "primaryValue"});
  std::size_t next_valid = 0;
  std::size_t defect_index = 0;
  constexpr std::array kReasons = {ingest::RejectReason::FieldCount, ingest::RejectReason::NumericParse,
                                   ingest::RejectReason::MissingRequired, ingest::RejectReason::BadHsCode,
                                   ingest::RejectReason::EncodingError};
  for (std::size_t slot = 0; slot < spec.n_records; ++slot) {
    const std::size_t line_number = slot + 2;
    if (defect_index < defect_slots.size() && defect_slots[defect_index] == slot) {
      const auto reason = kReasons[defect_index % kReasons.size()];
      Draft d;
      draw_record(d);
      d.weight = round_to(std::pow(10.0, d.log_weight), 0.001);
      d.value = round_to(d.weight * std::pow(10.0, d.log_price), 0.01);
      out << defect_line(d, reason);
      truth.defects.push_back({line_number, reason});
      ++defect_index;
      continue;
    }
    out << join_line(line_fields(drafts[next_valid]));
    ++next_valid;
  }

  for (auto i : outliers) truth.price_outliers.push_back(static_cast<RecordId>(i));
  for (auto i : vague) truth.vague.push_back(static_cast<RecordId>(i));
  for (auto i : mega) truth.mega_trades.push_back(static_cast<RecordId>(i));
  return {out.str(), std::move(truth)};
}

std::string GroundTruth::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["n_records"] = n_records;
  j["n_valid"] = n_valid;
  j["price_outliers"] = price_outliers;
  j["vague"] = vague;
  j["mega_trades"] = mega_trades;
  j["defects"] = nlohmann::ordered_json::array();
  for (const auto& d : defects) {
    j["defects"].push_back({{"line_number", d.line_number}, {"reason", ingest::to_string(d.reason)}});
  }
  j["communities"] = community;
  j["slopes"] = {{"general", general_slope}, {"high_risk", high_risk_slope}};
  j["dominant_route"] = {{"reporter", dominant_route.first}, {"partner", dominant_route.second}};
  j["mega_reporter"] = mega_reporter;
  j["mega_month"] = mega_month.to_string();
  return j.dump(2) + "\n";
}

GroundTruth GroundTruth::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  GroundTruth t;
  t.seed = j.at("seed").get<std::uint64_t>();
  t.n_records = j.at("n_records").get<std::size_t>();
  t.n_valid = j.at("n_valid").get<std::size_t>();
  t.price_outliers = j.at("price_outliers").get<std::vector<RecordId>>();
  t.vague = j.at("vague").get<std::vector<RecordId>>();
  t.mega_trades = j.at("mega_trades").get<std::vector<RecordId>>();
  for (const auto& d : j.at("defects")) {
    const auto reason = ingest::reject_reason_from_string(d.at("reason").get<std::string>());
    if (!reason) throw InputError("unknown defect reason in ground truth");
    t.defects.push_back({d.at("line_number").get<std::size_t>(), *reason});
  }
  t.community = j.at("communities").get<std::map<std::string, int>>();
  t.general_slope = j.at("slopes").at("general").get<double>();
  t.high_risk_slope = j.at("slopes").at("high_risk").get<double>();
  t.dominant_route = {j.at("dominant_route").at("reporter").get<std::string>(),
                      j.at("dominant_route").at("partner").get<std::string>()};
  t.mega_reporter = j.at("mega_reporter").get<std::string>();
  const auto month = ingest::parse_period(j.at("mega_month").get<std::string>());
  if (!month) throw InputError("bad mega_month in ground truth");
  t.mega_month = *month;
  return t;
}

}  // namespace tradescan::synthgen
