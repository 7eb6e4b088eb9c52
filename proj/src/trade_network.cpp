#include "tradescan/trade_network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <ostream>

#include "tradescan/csv.hpp"
#include "tradescan/rng.hpp"

namespace tradescan::trade_network {
namespace {

// Gains closer than this are treated as equal so rounding noise cannot
// trigger moves.
constexpr double kGainEpsilon = 1e-12;

struct Level {
  std::vector<int> community;  // per node of this level, dense ids
  bool moved = false;
};

Level one_level(const WeightedGraph& g, const std::vector<int>& order) {
  const std::size_t n = g.size();
  const double m2 = 2.0 * g.total_weight();
  std::vector<int> comm(n);
  std::iota(comm.begin(), comm.end(), 0);
  std::vector<double> degree(n);
  std::vector<double> self(n, 0.0);
  std::vector<double> tot(n);
  for (std::size_t i = 0; i < n; ++i) {
    degree[i] = g.degree(static_cast<int>(i));
    tot[i] = degree[i];
    for (const auto& [j, w] : g.adjacency[i]) {
      if (j == static_cast<int>(i)) self[i] += w;
    }
  }

  Level level;
  std::vector<double> link(n, 0.0);
  std::vector<int> touched;
  bool improved = true;
  while (improved) {
    improved = false;
    for (int node : order) {
      const auto u = static_cast<std::size_t>(node);
      const int current = comm[u];
      touched.clear();
      for (const auto& [j, w] : g.adjacency[u]) {
        if (j == node) continue;
        const int c = comm[static_cast<std::size_t>(j)];
        if (link[static_cast<std::size_t>(c)] == 0.0) touched.push_back(c);
        link[static_cast<std::size_t>(c)] += w;
      }
      tot[static_cast<std::size_t>(current)] -= degree[u];

      // Gain of joining c, up to the common factor 1/m.
      const auto gain = [&](int c) {
        return link[static_cast<std::size_t>(c)] - tot[static_cast<std::size_t>(c)] * degree[u] / m2;
      };
      int best = current;
      double best_gain = gain(current);
      std::sort(touched.begin(), touched.end());
      for (int c : touched) {
        const double g_c = gain(c);
        if (g_c > best_gain + kGainEpsilon) {
          best_gain = g_c;
          best = c;
        }
      }
      tot[static_cast<std::size_t>(best)] += degree[u];
      comm[u] = best;
      if (best != current) {
        improved = true;
        level.moved = true;
      }
      for (int c : touched) link[static_cast<std::size_t>(c)] = 0.0;
      link[static_cast<std::size_t>(current)] = 0.0;
    }
  }

  // Dense renumbering in node order.
  std::vector<int> remap(n, -1);
  int next = 0;
  level.community.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = remap[static_cast<std::size_t>(comm[i])];
    if (r < 0) r = next++;
    level.community[i] = r;
  }
  return level;
}

WeightedGraph aggregate(const WeightedGraph& g, const std::vector<int>& community, int k) {
  std::vector<std::map<int, double>> acc(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const int ci = community[i];
    for (const auto& [j, w] : g.adjacency[i]) {
      const int cj = community[static_cast<std::size_t>(j)];
      if (j == static_cast<int>(i)) {
        acc[static_cast<std::size_t>(ci)][ci] += w;
      } else if (static_cast<int>(i) < j) {
        if (ci == cj) acc[static_cast<std::size_t>(ci)][ci] += w;
        else {
          acc[static_cast<std::size_t>(ci)][cj] += w;
          acc[static_cast<std::size_t>(cj)][ci] += w;
        }
      }
    }
  }
  WeightedGraph out(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    for (const auto& [d, w] : acc[static_cast<std::size_t>(c)]) {
      out.adjacency[static_cast<std::size_t>(c)].push_back({d, w});
    }
  }
  return out;
}

}  // namespace

std::set<std::string> default_aggregate_labels() {
  return {"World", "Areas, nes", "Other Asia, nes", "Bunkers", "Free Zones", "Special Categories"};
}

int TradeGraph::index_of(const std::string& label) const {
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), label);
  if (it == nodes.end() || *it != label) return -1;
  return static_cast<int>(it - nodes.begin());
}

TradeGraph build_graph(std::span<const TradeRecord> flagged,
                       const std::set<std::string>& aggregate_labels) {
  TradeGraph g;
  std::set<std::string> nodes;
  for (const auto& r : flagged) {
    if (aggregate_labels.contains(r.reporter) || aggregate_labels.contains(r.partner)) continue;
    nodes.insert(r.reporter);
    nodes.insert(r.partner);
    if (r.flow == Flow::Import) {
      g.import_value[r.reporter] += r.primary_value_usd;
      g.export_value[r.partner] += r.primary_value_usd;
    } else if (r.flow == Flow::Export) {
      g.export_value[r.reporter] += r.primary_value_usd;
      g.import_value[r.partner] += r.primary_value_usd;
    }
    if (r.reporter == r.partner) continue;
    auto& e = g.edges[{r.reporter, r.partner}];
    ++e.count;
    e.value += r.primary_value_usd;
  }
  g.nodes.assign(nodes.begin(), nodes.end());
  return g;
}

void WeightedGraph::add_edge(int u, int v, double w) {
  const auto add = [&](int a, int b) {
    auto& list = adjacency[static_cast<std::size_t>(a)];
    auto it = std::find_if(list.begin(), list.end(), [&](const auto& p) { return p.first == b; });
    if (it == list.end()) list.push_back({b, w});
    else it->second += w;
  };
  add(u, v);
  if (u != v) add(v, u);
}

double WeightedGraph::degree(int u) const {
  double d = 0.0;
  for (const auto& [v, w] : adjacency[static_cast<std::size_t>(u)]) d += (v == u) ? 2.0 * w : w;
  return d;
}

double WeightedGraph::total_weight() const {
  double total = 0.0;
  for (std::size_t u = 0; u < size(); ++u) total += degree(static_cast<int>(u));
  return total / 2.0;
}

WeightedGraph symmetrize(const TradeGraph& graph, EdgeWeighting weighting) {
  WeightedGraph g(graph.nodes.size());
  for (const auto& [key, w] : graph.edges) {
    const int u = graph.index_of(key.first);
    const int v = graph.index_of(key.second);
    const double weight = weighting == EdgeWeighting::Count ? static_cast<double>(w.count) : w.value;
    if (u < 0 || v < 0 || u == v || weight == 0.0) continue;
    g.add_edge(u, v, weight);
  }
  for (auto& list : g.adjacency) std::sort(list.begin(), list.end());
  return g;
}

double modularity(const WeightedGraph& graph, std::span<const int> community) {
  const double m2 = 2.0 * graph.total_weight();
  if (m2 <= 0.0) return 0.0;
  std::map<int, double> in;
  std::map<int, double> tot;
  for (std::size_t u = 0; u < graph.size(); ++u) {
    const int cu = community[u];
    tot[cu] += graph.degree(static_cast<int>(u));
    for (const auto& [v, w] : graph.adjacency[u]) {
      if (community[static_cast<std::size_t>(v)] != cu) continue;
      in[cu] += (v == static_cast<int>(u)) ? 2.0 * w : w;
    }
  }
  double q = 0.0;
  for (const auto& [c, t] : tot) {
    const double share = t / m2;
    q += in[c] / m2 - share * share;
  }
  return q;
}

int CommunityPartition::community_count() const {
  return community.empty() ? 0 : *std::max_element(community.begin(), community.end()) + 1;
}

CommunityPartition louvain_partition(const WeightedGraph& graph, const LouvainParams& params) {
  CommunityPartition result;
  const std::size_t n = graph.size();
  result.community.resize(n);
  std::iota(result.community.begin(), result.community.end(), 0);
  if (n == 0 || graph.total_weight() <= 0.0) {
    result.modularity = modularity(graph, result.community);
    return result;
  }

  Rng rng(params.seed);
  WeightedGraph current = graph;
  while (true) {
    std::vector<int> order(current.size());
    std::iota(order.begin(), order.end(), 0);
    if (params.shuffle) rng.shuffle(order);
    Level level = one_level(current, order);
    if (!level.moved) break;
    for (auto& c : result.community) c = level.community[static_cast<std::size_t>(c)];
    result.pass_modularity.push_back(modularity(graph, result.community));
    const int k = *std::max_element(level.community.begin(), level.community.end()) + 1;
    if (static_cast<std::size_t>(k) == current.size()) break;
    current = aggregate(current, level.community, k);
  }
  // Renumber in original node order.
  std::vector<int> remap(n, -1);
  int next = 0;
  for (auto& c : result.community) {
    auto& r = remap[static_cast<std::size_t>(c)];
    if (r < 0) r = next++;
    c = r;
  }
  result.modularity = modularity(graph, result.community);
  return result;
}

std::vector<double> betweenness(const WeightedGraph& graph) {
  const std::size_t n = graph.size();
  std::vector<double> cb(n, 0.0);
  if (n < 3) return cb;

  std::vector<std::vector<int>> adj(n);
  for (std::size_t u = 0; u < n; ++u) {
    for (const auto& [v, w] : graph.adjacency[u]) {
      if (v != static_cast<int>(u) && w > 0.0) adj[u].push_back(v);
    }
  }

  std::vector<int> stack;
  std::vector<std::vector<int>> pred(n);
  std::vector<double> sigma(n);
  std::vector<int> dist(n);
  std::vector<double> delta(n);
  std::deque<int> queue;
  for (std::size_t s = 0; s < n; ++s) {
    stack.clear();
    for (auto& p : pred) p.clear();
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    sigma[s] = 1.0;
    dist[s] = 0;
    queue.assign(1, static_cast<int>(s));
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      stack.push_back(v);
      for (int w : adj[static_cast<std::size_t>(v)]) {
        const auto wi = static_cast<std::size_t>(w);
        if (dist[wi] < 0) {
          dist[wi] = dist[static_cast<std::size_t>(v)] + 1;
          queue.push_back(w);
        }
        if (dist[wi] == dist[static_cast<std::size_t>(v)] + 1) {
          sigma[wi] += sigma[static_cast<std::size_t>(v)];
          pred[wi].push_back(v);
        }
      }
    }
    std::fill(delta.begin(), delta.end(), 0.0);
    while (!stack.empty()) {
      const int w = stack.back();
      stack.pop_back();
      const auto wi = static_cast<std::size_t>(w);
      for (int v : pred[wi]) {
        const auto vi = static_cast<std::size_t>(v);
        delta[vi] += sigma[vi] / sigma[wi] * (1.0 + delta[wi]);
      }
      if (wi != s) cb[wi] += delta[wi];
    }
  }
  // Each unordered pair was counted from both endpoints.
  const double norm = static_cast<double>((n - 1) * (n - 2)) / 2.0;
  for (auto& c : cb) c = c / 2.0 / norm;
  return cb;
}

double flow_ratio(double import_value, double export_value) {
  if (export_value <= 0.0) return 2.0;
  return std::clamp(import_value / export_value, 0.0, 2.0);
}

double flow_balance(double ratio) { return std::max(0.0, 1.0 - std::abs(ratio - 1.0)); }

double transshipment_score(double norm_betweenness, double balance, double norm_avg_risk) {
  return kBetweennessWeight * norm_betweenness + kBalanceWeight * balance +
         kRiskWeight * norm_avg_risk;
}

namespace {

std::vector<double> min_max(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (range <= 0.0) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / range;
  return out;
}

double lookup(const std::map<std::string, double>& m, const std::string& key) {
  const auto it = m.find(key);
  return it == m.end() ? 0.0 : it->second;
}

}  // namespace

CentralityReport transshipment_index(const TradeGraph& graph, std::span<const double> betweenness,
                                     std::span<const double> avg_risk) {
  const auto nb = min_max(betweenness);
  const auto nr = min_max(avg_risk);
  CentralityReport report;
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    NodeCentrality c;
    c.node = graph.nodes[i];
    c.betweenness = i < betweenness.size() ? betweenness[i] : 0.0;
    c.import_value = lookup(graph.import_value, c.node);
    c.export_value = lookup(graph.export_value, c.node);
    c.flow_ratio = flow_ratio(c.import_value, c.export_value);
    c.balance = flow_balance(c.flow_ratio);
    c.norm_betweenness = i < nb.size() ? nb[i] : 0.0;
    c.norm_avg_risk = i < nr.size() ? nr[i] : 0.0;
    c.transshipment_index = transshipment_score(c.norm_betweenness, c.balance, c.norm_avg_risk);
    report.push_back(std::move(c));
  }
  return report;
}

void write_communities_csv(std::ostream& out, const TradeGraph& graph,
                           const CommunityPartition& partition) {
  out << "# modularity=" << csv::format_double(partition.modularity)
      << " communities=" << partition.community_count() << '\n';
  csv::write_row(out, {"node", "community"});
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    csv::write_row(out, {graph.nodes[i], std::to_string(partition.community[i])});
  }
}

void write_centrality_csv(std::ostream& out, const CentralityReport& report) {
  csv::write_row(out, {"node", "betweenness", "flow_ratio", "import_value", "export_value",
                       "transshipment_index"});
  for (const auto& c : report) {
    csv::write_row(out, {c.node, csv::format_double(c.betweenness), csv::format_double(c.flow_ratio),
                         csv::format_double(c.import_value), csv::format_double(c.export_value),
                         csv::format_double(c.transshipment_index)});
  }
}

}  // namespace tradescan::trade_network
