#include <adaptnet/graph.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace adaptnet;

namespace {

oracle::Matrix dense(const UndirectedWeightedGraph& g) {
  oracle::Matrix m(g.size(), std::vector<double>(g.size(), 0.0));
  for (const auto& e : g.edges()) m[e.i][e.j] = m[e.j][e.i] = e.weight;
  return m;
}

// Disjoint cliques of the given sizes with unit weights.
UndirectedWeightedGraph cliques(std::vector<std::size_t> sizes, double weight = 1.0) {
  std::vector<Edge> edges;
  std::size_t base = 0;
  for (const auto s : sizes) {
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = i + 1; j < s; ++j) edges.push_back({base + i, base + j, weight});
    base += s;
  }
  return UndirectedWeightedGraph(base, edges);
}

UndirectedWeightedGraph random_graph(Rng& rng, std::size_t n, double density) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.uniform() < density) edges.push_back({i, j, rng.uniform(0.01, 2.0)});
  return UndirectedWeightedGraph(n, edges);
}

std::vector<std::size_t> labels_of(const Partition& p) { return {p.assignment().begin(), p.assignment().end()}; }

}  // namespace

TEST(Graph, NormalizesAndRejects) {
  const UndirectedWeightedGraph g(3, {{2, 0, 0.5}, {1, 2, 0.0}});
  ASSERT_EQ(g.edges().size(), 1u);
  EXPECT_EQ(g.edges()[0], (Edge{0, 2, 0.5}));
  EXPECT_THROW(UndirectedWeightedGraph(3, {{1, 1, 1.0}}), std::invalid_argument);
  EXPECT_THROW(UndirectedWeightedGraph(3, {{0, 1, 1.0}, {1, 0, 2.0}}), std::invalid_argument);
  EXPECT_THROW(UndirectedWeightedGraph(3, {{0, 3, 1.0}}), std::invalid_argument);
  EXPECT_THROW(UndirectedWeightedGraph(3, {{0, 1, -1.0}}), std::invalid_argument);
}

TEST(Partition, RelabelsByFirstAppearance) {
  const Partition p(std::vector<std::size_t>{7, 3, 7, 9});
  EXPECT_EQ(labels_of(p), (std::vector<std::size_t>{0, 1, 0, 2}));
  EXPECT_EQ(p.community_count(), 3u);
}

TEST(Symmetrize, AveragesPairs) {
  NetworkState s{{0, 0, 0}, WeightMatrix(3)};
  s.w(0, 1) = 0.2;
  s.w(1, 0) = 0.4;
  s.w(0, 2) = s.w(2, 0) = 0.5;
  const auto g = symmetrize(s);
  ASSERT_EQ(g.edges().size(), 2u);
  EXPECT_NEAR(g.edges()[0].weight, 0.3, 1e-15);
  EXPECT_EQ(g.edges()[1], (Edge{0, 2, 0.5}));
}

TEST(Symmetrize, ZeroPairsOmitted) {
  NetworkState s{{0, 0}, WeightMatrix(2)};
  EXPECT_TRUE(symmetrize(s).edges().empty());
}

TEST(Symmetrize, IdempotentOnSymmetricMatrix) {
  Rng rng(3);
  NetworkState s{std::vector<double>(6), WeightMatrix(6)};
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = i + 1; j < 6; ++j) s.w(i, j) = s.w(j, i) = rng.uniform();
  const auto g = symmetrize(s);
  EXPECT_EQ(g.edges().size(), 15u);
  for (const auto& e : g.edges()) EXPECT_EQ(e.weight, s.w(e.i, e.j));
}

TEST(Modularity, OneCommunityIsZero) {
  Rng rng(4);
  const auto g = random_graph(rng, 7, 0.6);
  EXPECT_NEAR(modularity(g, Partition::whole(7)), 0.0, 1e-15);
}

TEST(Modularity, TwoTrianglesHalf) {
  const auto g = cliques({3, 3});
  EXPECT_DOUBLE_EQ(modularity(g, Partition(std::vector<std::size_t>{0, 0, 0, 1, 1, 1})), 0.5);
  const auto best = oracle::brute_force_max_modularity(dense(g));
  EXPECT_DOUBLE_EQ(best.q, 0.5);
}

TEST(Modularity, SingletonsOnPath) {
  // Path 0-1-2-3: degrees 1,2,2,1, 2m = 6.
  const UndirectedWeightedGraph g(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}});
  const auto single = Partition::singletons(4);
  const double want = oracle::modularity(dense(g), labels_of(single));
  EXPECT_NEAR(want, -10.0 / 36.0, 1e-15);
  EXPECT_NEAR(modularity(g, single), want, 1e-15);
}

TEST(Modularity, EdgelessIsZeroAndSizeChecked) {
  const UndirectedWeightedGraph g(3, {});
  EXPECT_EQ(modularity(g, Partition::singletons(3)), 0.0);
  EXPECT_THROW(modularity(g, Partition::singletons(2)), std::invalid_argument);
}

TEST(Modularity, MatchesDirectFormulaOnRandomGraphs) {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(8);
    const auto g = random_graph(rng, n, rng.uniform());
    std::vector<std::size_t> labels(n);
    for (auto& l : labels) l = rng.below(n);
    const Partition p(labels);
    EXPECT_NEAR(modularity(g, p), oracle::modularity(dense(g), labels_of(p)), 1e-12);
  }
}

TEST(Louvain, TwoFourCliques) {
  const auto g = cliques({4, 4});
  Rng rng(6);
  const auto p = louvain(g, rng);
  EXPECT_EQ(p.community_count(), 2u);
  EXPECT_EQ(labels_of(p), (std::vector<std::size_t>{0, 0, 0, 0, 1, 1, 1, 1}));
  EXPECT_DOUBLE_EQ(modularity(g, p), oracle::brute_force_max_modularity(dense(g)).q);
}

TEST(Louvain, EdgelessGivesSingletons) {
  Rng rng(7);
  EXPECT_EQ(louvain(UndirectedWeightedGraph(5, {}), rng), Partition::singletons(5));
}

TEST(Louvain, UniformCompleteGraphIsOneCommunity) {
  const auto g = cliques({6});
  const auto best = oracle::brute_force_max_modularity(dense(g));
  EXPECT_NEAR(best.q, 0.0, 1e-15);
  EXPECT_EQ(best.labels, std::vector<std::size_t>(6, 0));
  Rng rng(8);
  EXPECT_EQ(louvain(g, rng).community_count(), 1u);
}

TEST(Louvain, IsolatedNodesStaySingletons) {
  const UndirectedWeightedGraph g(6, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}});
  Rng rng(9);
  const auto p = louvain(g, rng);
  EXPECT_EQ(p.community_count(), 4u);
  EXPECT_EQ(p[0], p[1]);
  EXPECT_EQ(p[1], p[2]);
}

TEST(Louvain, NeverWorseThanSingletons) {
  Rng rng(10);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng.below(20);
    const auto g = random_graph(rng, n, rng.uniform());
    const auto p = louvain(g, rng);
    const double q = modularity(g, p);
    EXPECT_GE(q, modularity(g, Partition::singletons(n)) - 1e-12);
    if (g.total_weight() > 0) {
      EXPECT_GE(q, -1e-12);
    }
  }
}

TEST(Louvain, OptimalOnDisjointCliques) {
  Rng rng(11);
  for (int t = 0; t < 40; ++t) {
    std::vector<std::size_t> sizes;
    std::size_t total = 0;
    while (total < 5) {
      const std::size_t s = 2 + rng.below(3);
      if (total + s > 8) break;
      sizes.push_back(s);
      total += s;
    }
    if (sizes.size() < 2) continue;
    const auto g = cliques(sizes, rng.uniform(0.5, 2.0));
    const auto best = oracle::brute_force_max_modularity(dense(g));
    ASSERT_GT(best.q - best.runner_up, 1e-6);
    const auto p = louvain(g, rng);
    EXPECT_NEAR(modularity(g, p), best.q, 1e-9);
    EXPECT_EQ(labels_of(p), best.labels);
  }
}

TEST(Louvain, SeedDeterminism) {
  Rng g_rng(12);
  const auto g = random_graph(g_rng, 40, 0.3);
  Rng a(5), b(5);
  EXPECT_EQ(louvain(g, a), louvain(g, b));
}

TEST(CommunityAverages, Examples) {
  EXPECT_EQ(community_average_states(Partition::whole(3), std::vector<double>{1, 2, 3}),
            (std::vector<double>{2.0}));
  EXPECT_EQ(community_average_states(Partition::singletons(2), std::vector<double>{-1, 1}),
            (std::vector<double>{-1.0, 1.0}));
  EXPECT_EQ(community_average_states(Partition(std::vector<std::size_t>{0, 0, 1}), std::vector<double>{0, 1, 5}),
            (std::vector<double>{0.5, 5.0}));
}

TEST(OutcomeVector, ConstantWeightsOneCommunity) {
  NetworkState s{{0.1, 0.2, 0.3, 0.4}, WeightMatrix(4)};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (i != j) s.w(i, j) = 0.5;
  const auto o = outcome_vector(s, 1);
  EXPECT_DOUBLE_EQ(o.avg_edge_weight, 0.5);
  EXPECT_EQ(o.num_communities, 1u);
  EXPECT_EQ(o.range_community_states, 0.0);
  EXPECT_EQ(o.std_community_states, 0.0);
}

TEST(OutcomeVector, TwoOpinionClusters) {
  const std::size_t n = 10;
  NetworkState s{std::vector<double>(n), WeightMatrix(n)};
  for (std::size_t i = 0; i < n; ++i) {
    s.x[i] = i < 5 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && (i < 5) == (j < 5)) s.w(i, j) = 1.0;
  }
  const auto o = outcome_vector(s, 3);
  EXPECT_EQ(o.num_communities, 2u);
  EXPECT_DOUBLE_EQ(o.range_community_states, 2.0);
  EXPECT_DOUBLE_EQ(o.std_community_states, 1.0);
  EXPECT_DOUBLE_EQ(o.modularity, 0.5);
  EXPECT_DOUBLE_EQ(o.avg_edge_weight, 40.0 / 90.0);
}

TEST(OutcomeVector, InvariantsOnSimulatedStates) {
  Rng rng(13);
  for (int t = 0; t < 10; ++t) {
    SimParams p;
    p.n = 20;
    p.t_end = 20;
    p.c = rng.uniform(0, 1);
    p.h = rng.uniform(0, 1);
    p.a = rng.uniform(0, 1);
    const auto s = run_simulation(p, t);
    const auto o = outcome_vector(s, t);
    EXPECT_GE(o.modularity, -0.5);
    EXPECT_LE(o.modularity, 1.0);
    EXPECT_GE(o.num_communities, 1u);
    EXPECT_LE(o.num_communities, p.n);
    EXPECT_LE(o.std_community_states, o.range_community_states / 2 + 1e-12);
  }
}
