#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "tradescan/rng.hpp"
#include "tradescan/trade_network.hpp"

using namespace tradescan;
using namespace tradescan::trade_network;

namespace {

WeightedGraph from_edges(std::size_t n, const std::vector<std::pair<int, int>>& edges, double w = 1.0) {
  WeightedGraph g(n);
  for (auto [u, v] : edges) g.add_edge(u, v, w);
  return g;
}

oracle::Adjacency to_adjacency(const WeightedGraph& g) {
  oracle::Adjacency adj(g.size());
  for (std::size_t u = 0; u < g.size(); ++u) {
    for (auto [v, w] : g.adjacency[u]) {
      if (v != static_cast<int>(u)) adj[u].push_back(v);
    }
  }
  return adj;
}

std::vector<std::vector<double>> to_dense(const WeightedGraph& g) {
  std::vector<std::vector<double>> a(g.size(), std::vector<double>(g.size(), 0.0));
  for (std::size_t u = 0; u < g.size(); ++u) {
    for (auto [v, w] : g.adjacency[u]) a[u][v] += w;
  }
  return a;
}

WeightedGraph random_graph(std::size_t n, double p, Rng& rng, bool weighted) {
  WeightedGraph g(n);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (rng.uniform() < p) g.add_edge(static_cast<int>(u), static_cast<int>(v), weighted ? 1 + rng.below(5) : 1.0);
    }
  }
  return g;
}

WeightedGraph clique(std::size_t n, std::size_t offset, WeightedGraph g) {
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) g.add_edge(static_cast<int>(offset + u), static_cast<int>(offset + v), 1);
  }
  return g;
}

TradeRecord rec(std::string rep, std::string part, Flow flow, double value) {
  TradeRecord r;
  r.reporter = std::move(rep);
  r.partner = std::move(part);
  r.flow = flow;
  r.primary_value_usd = value;
  return r;
}

}  // namespace

TEST_CASE("graph building skips aggregates and mirrors flows") {
  const std::vector<TradeRecord> flagged{rec("USA", "China", Flow::Import, 100), rec("USA", "China", Flow::Import, 50),
                                         rec("China", "Mexico", Flow::Export, 30), rec("USA", "World", Flow::Import, 999),
                                         rec("Mexico", "Mexico", Flow::Import, 5)};
  const auto g = build_graph(flagged);
  CHECK(g.nodes == std::vector<std::string>{"China", "Mexico", "USA"});
  REQUIRE(g.edges.size() == 2);
  CHECK(g.edges.at({"USA", "China"}).count == 2);
  CHECK(g.edges.at({"USA", "China"}).value == 150);
  CHECK(g.import_value.at("USA") == 150);
  CHECK(g.export_value.at("China") == 180);
  CHECK(g.import_value.at("Mexico") == 35);
  CHECK(g.export_value.at("Mexico") == 5);
  CHECK(g.index_of("World") == -1);
}

TEST_CASE("symmetrize adds both directions") {
  const std::vector<TradeRecord> flagged{rec("A", "B", Flow::Import, 1), rec("B", "A", Flow::Export, 1),
                                         rec("B", "A", Flow::Export, 1)};
  const auto g = symmetrize(build_graph(flagged, {}));
  REQUIRE(g.size() == 2);
  CHECK(g.total_weight() == 3);
  CHECK(g.degree(0) == 3);
  const auto gv = symmetrize(build_graph(flagged, {}), EdgeWeighting::Value);
  CHECK(gv.total_weight() == 3);
}

TEST_CASE("modularity equals the pairwise-definition oracle") {
  Rng rng(5);
  for (int t = 0; t < 30; ++t) {
    auto g = random_graph(2 + rng.below(9), 0.4, rng, true);
    if (t % 3 == 0) g.add_edge(0, 0, 2);  // self-loop
    std::vector<int> c(g.size());
    for (auto& x : c) x = static_cast<int>(rng.below(3));
    CHECK(modularity(g, c) == doctest::Approx(oracle::dense_modularity(to_dense(g), c)).epsilon(1e-12));
  }
}

TEST_CASE("Louvain on two disjoint triangles") {
  const auto g = clique(3, 3, clique(3, 0, WeightedGraph(6)));
  const auto p = louvain_partition(g);
  CHECK(p.community_count() == 2);
  CHECK(p.community[0] == p.community[1]);
  CHECK(p.community[1] == p.community[2]);
  CHECK(p.community[3] == p.community[4]);
  CHECK(p.community[0] != p.community[3]);
  CHECK(p.modularity == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("Louvain partitions are locally optimal and near the exhaustive optimum") {
  Rng rng(8);
  for (int t = 0; t < 25; ++t) {
    const auto g = random_graph(4 + rng.below(5), 0.45, rng, t % 2 == 1);
    if (g.total_weight() == 0) continue;
    const auto p = louvain_partition(g, {static_cast<std::uint64_t>(t), t % 4 == 0});
    CHECK(p.modularity == doctest::Approx(modularity(g, p.community)).epsilon(1e-12));
    for (std::size_t i = 1; i < p.pass_modularity.size(); ++i) {
      CHECK(p.pass_modularity[i] >= p.pass_modularity[i - 1] - 1e-12);
    }
    // No single-node move improves the final partition.
    for (std::size_t u = 0; u < g.size(); ++u) {
      for (int c = 0; c < p.community_count(); ++c) {
        auto moved = p.community;
        moved[u] = c;
        CHECK(modularity(g, moved) <= p.modularity + 1e-12);
      }
    }
    CHECK(p.modularity <= oracle::best_modularity(to_dense(g)) + 1e-12);
  }
}

TEST_CASE("Louvain is deterministic for a fixed seed") {
  Rng rng(21);
  const auto g = random_graph(30, 0.15, rng, true);
  const auto a = louvain_partition(g, {4, true});
  const auto b = louvain_partition(g, {4, true});
  CHECK(a.community == b.community);
  CHECK(a.modularity == b.modularity);
}

TEST_CASE("Louvain handles an edgeless graph") {
  const auto p = louvain_partition(WeightedGraph(3));
  CHECK(p.community.size() == 3);
  CHECK(p.modularity == 0.0);
}

TEST_CASE("betweenness closed forms") {
  SUBCASE("path") {
    const std::size_t n = 6;
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i + 1 < static_cast<int>(n); ++i) e.push_back({i, i + 1});
    const auto bc = betweenness(from_edges(n, e));
    const double norm = (n - 1.0) * (n - 2.0) / 2.0;
    for (std::size_t i = 0; i < n; ++i) CHECK(bc[i] == doctest::Approx(i * (n - 1.0 - i) / norm).epsilon(1e-15));
  }
  SUBCASE("star") {
    std::vector<std::pair<int, int>> e;
    for (int i = 1; i < 7; ++i) e.push_back({0, i});
    const auto bc = betweenness(from_edges(7, e));
    CHECK(bc[0] == 1.0);
    for (int i = 1; i < 7; ++i) CHECK(bc[i] == 0.0);
  }
  SUBCASE("complete") {
    const auto bc = betweenness(clique(6, 0, WeightedGraph(6)));
    for (double b : bc) CHECK(b == 0.0);
  }
  SUBCASE("tiny") {
    CHECK(betweenness(from_edges(2, {{0, 1}})) == std::vector<double>{0, 0});
  }
}

TEST_CASE("betweenness equals the all-paths oracle on small graphs") {
  Rng rng(13);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 3 + rng.below(6);
    const auto g = random_graph(n, 0.2 + 0.1 * (t % 6), rng, true);
    const auto bc = betweenness(g);
    const auto raw = oracle::brute_betweenness(to_adjacency(g));
    const double norm = (n - 1.0) * (n - 2.0) / 2.0;
    for (std::size_t v = 0; v < n; ++v) CHECK(bc[v] == doctest::Approx(raw[v] / norm).epsilon(1e-12));
  }
}

TEST_CASE("flow ratio and transshipment score") {
  CHECK(flow_ratio(100, 100) == 1.0);
  CHECK(flow_ratio(100, 0) == 2.0);
  CHECK(flow_ratio(0, 0) == 2.0);
  CHECK(flow_ratio(500, 100) == 2.0);
  CHECK(flow_ratio(50, 100) == 0.5);
  CHECK(flow_balance(1.0) == 1.0);
  CHECK(flow_balance(2.0) == 0.0);
  CHECK(flow_balance(0.5) == 0.5);
  CHECK(transshipment_score(1, 1, 1) == doctest::Approx(1.0));
  CHECK(transshipment_score(1, 0, 0) == doctest::Approx(0.4));
}

TEST_CASE("transshipment index normalizes over nodes") {
  const std::vector<TradeRecord> flagged{rec("A", "B", Flow::Import, 100), rec("B", "C", Flow::Import, 100),
                                         rec("C", "D", Flow::Import, 100)};
  const auto graph = build_graph(flagged, {});
  const auto bc = betweenness(symmetrize(graph));
  const std::vector<double> risk{0.2, 0.4, 0.4, 0.6};
  const auto report = transshipment_index(graph, bc, risk);
  REQUIRE(report.size() == 4);
  // B and C sit in the middle, import and export 100 each.
  CHECK(report[1].norm_betweenness == 1.0);
  CHECK(report[1].balance == 1.0);
  CHECK(report[1].norm_avg_risk == doctest::Approx(0.5));
  CHECK(report[1].transshipment_index == doctest::Approx(0.4 + 0.3 + 0.15));
  CHECK(report[0].norm_betweenness == 0.0);
  CHECK(report[0].norm_avg_risk == 0.0);
  const auto flat = transshipment_index(graph, bc, std::vector<double>(4, 0.3));
  for (const auto& n : flat) CHECK(n.norm_avg_risk == 0.0);
}

TEST_CASE("community and centrality csv") {
  const auto g = clique(3, 3, clique(3, 0, WeightedGraph(6)));
  TradeGraph tg;
  tg.nodes = {"a", "b", "c", "d", "e", "f"};
  std::ostringstream out;
  write_communities_csv(out, tg, louvain_partition(g));
  CHECK(out.str().rfind("# modularity=0.5", 0) == 0);
  CHECK(out.str().find("node,community\na,0\n") != std::string::npos);
}
