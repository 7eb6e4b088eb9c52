#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tradescan/types.hpp"

namespace tradescan::trade_network {

struct EdgeWeight {
  std::size_t count = 0;
  double value = 0.0;
};

// Labels such as "World" that aggregate many countries.
std::set<std::string> default_aggregate_labels();

struct TradeGraph {
  std::vector<std::string> nodes;  // sorted country labels
  std::map<std::pair<std::string, std::string>, EdgeWeight> edges;  // reporter -> partner
  // Mirror-aware flow totals per node: a reported import counts as an
  // export of the partner and vice versa.
  std::map<std::string, double> import_value;
  std::map<std::string, double> export_value;

  int index_of(const std::string& label) const;  // -1 if absent
};

TradeGraph build_graph(std::span<const TradeRecord> flagged,
                       const std::set<std::string>& aggregate_labels = default_aggregate_labels());

// Undirected weighted graph. A self-loop appears once in its own list.
struct WeightedGraph {
  std::vector<std::vector<std::pair<int, double>>> adjacency;

  explicit WeightedGraph(std::size_t n = 0) : adjacency(n) {}
  std::size_t size() const { return adjacency.size(); }
  // Adds w to the undirected edge {u, v}.
  void add_edge(int u, int v, double w);
  // Weighted degree; a self-loop contributes twice.
  double degree(int u) const;
  // Sum of edge weights, each edge once.
  double total_weight() const;
};

enum class EdgeWeighting { Count, Value };

// weight(u, v) = directed(u -> v) + directed(v -> u), node order as graph.nodes.
WeightedGraph symmetrize(const TradeGraph& graph, EdgeWeighting weighting = EdgeWeighting::Count);

// Q = sum_c [in_c / 2m - (tot_c / 2m)^2]; 0 when m = 0.
double modularity(const WeightedGraph& graph, std::span<const int> community);

struct LouvainParams {
  std::uint64_t seed = 0;
  bool shuffle = false;  // seeded node order instead of label order
};

struct CommunityPartition {
  std::vector<int> community;           // per node, ids 0..k-1 in first-seen order
  double modularity = 0.0;              // modularity() of `community`
  std::vector<double> pass_modularity;  // after each aggregation pass
  int community_count() const;
};

CommunityPartition louvain_partition(const WeightedGraph& graph, const LouvainParams& params = {});

// Brandes over unweighted shortest paths, normalized by (n-1)(n-2)/2; zeros when n < 3.
std::vector<double> betweenness(const WeightedGraph& graph);

inline constexpr double kBetweennessWeight = 0.4;
inline constexpr double kBalanceWeight = 0.3;
inline constexpr double kRiskWeight = 0.3;

struct NodeCentrality {
  std::string node;
  double betweenness = 0.0;
  double flow_ratio = 0.0;  // import / export, capped to [0, 2]
  double import_value = 0.0;
  double export_value = 0.0;
  double balance = 0.0;
  double norm_betweenness = 0.0;
  double norm_avg_risk = 0.0;
  double transshipment_index = 0.0;
};

using CentralityReport = std::vector<NodeCentrality>;

// Capped import/export ratio; export == 0 gives 2.
double flow_ratio(double import_value, double export_value);

// max(0, 1 - |ratio - 1|).
double flow_balance(double ratio);

double transshipment_score(double norm_betweenness, double balance, double norm_avg_risk);

// Min-max normalizes betweenness and average risk over nodes (all zero when
// constant) and combines them with the flow balance.
CentralityReport transshipment_index(const TradeGraph& graph, std::span<const double> betweenness,
                                     std::span<const double> avg_risk);

void write_communities_csv(std::ostream& out, const TradeGraph& graph,
                           const CommunityPartition& partition);

void write_centrality_csv(std::ostream& out, const CentralityReport& report);

}  // namespace tradescan::trade_network
