#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tradescan/ingest.hpp"
#include "tradescan/types.hpp"

namespace tradescan::synthgen {

struct PlantSpec {
  std::size_t n_records = 1000;  // data lines, malformed ones included
  std::size_t n_price_outliers = 0;
  std::size_t n_vague = 0;
  std::size_t n_mega_trades = 0;
  double general_slope = 1.0;
  double high_risk_slope = 1.5;
  std::vector<std::vector<std::string>> community_blocks;  // empty: built-in three blocks
  double intra_block_bias = 0.85;
  double defect_rate = 0.0;
  // Share of price outliers routed through the dominant route.
  double dominant_route_share = 0.5;
  Period mega_month{2021, 2};
  std::vector<std::string> vague_keywords;  // empty: default keyword list
  std::uint64_t seed = 7;
};

struct PlantedDefect {
  std::size_t line_number = 0;
  ingest::RejectReason reason = ingest::RejectReason::FieldCount;
};

struct GroundTruth {
  std::vector<RecordId> price_outliers;
  std::vector<RecordId> vague;
  std::vector<RecordId> mega_trades;
  std::vector<PlantedDefect> defects;
  std::map<std::string, int> community;  // country -> block index
  double general_slope = 1.0;
  double high_risk_slope = 1.5;
  std::pair<std::string, std::string> dominant_route;
  std::string mega_reporter;
  Period mega_month;
  std::size_t n_records = 0;
  std::size_t n_valid = 0;
  std::uint64_t seed = 0;

  std::string to_json() const;
  static GroundTruth from_json(const std::string& text);
};

struct SynthDataset {
  std::string csv;
  GroundTruth truth;
};

// Deterministic per seed. Throws ParameterError for infeasible specs.
SynthDataset generate_dataset(const PlantSpec& spec);

// High-risk and general HS codes used by the generator.
std::vector<std::string> generator_hs_codes();

}  // namespace tradescan::synthgen
