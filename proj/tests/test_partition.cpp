#include <doctest.h>

#include <cmath>

#include "fn/generators.hpp"
#include "fn/partition.hpp"
#include "fn/rng.hpp"
#include "oracles.hpp"

using namespace fn;

namespace {

Graph two_triangles() { return from_edge_list(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}}); }

Graph path(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return from_edge_list(n, e);
}

void check_cover(const Graph& g, const Partition& p) {
  p.validate(g);
  std::vector<int> seen(static_cast<std::size_t>(g.num_nodes), 0);
  for (int v = 0; v < g.num_nodes; ++v) seen[static_cast<std::size_t>(v)] = 0;
  for (int v = 0; v < g.num_nodes; ++v) {
    REQUIRE(p.base_assignment[static_cast<std::size_t>(v)] >= 0);
    REQUIRE(p.base_assignment[static_cast<std::size_t>(v)] < p.C);
  }
  for (const auto& blk : p.blocks) REQUIRE(!blk.empty());
}

}  // namespace

TEST_SUITE_BEGIN("partition");

TEST_CASE("multilevel C=1 single block, zero cut") {
  const Graph g = erdos_renyi(30, 0.2, 3);
  const Partition p = partition_multilevel(g, 1, 5);
  CHECK(p.C == 1);
  CHECK(p.blocks[0].size() == 30);
  CHECK(edge_cut(g, p) == 0);
}

TEST_CASE("multilevel recovers two disjoint triangles") {
  const Graph g = two_triangles();
  const Partition p = partition_multilevel(g, 2, 0.1, 7);
  check_cover(g, p);
  CHECK(edge_cut(g, p) == oracle::min_balanced_cut(g, 2, 4));
  CHECK(edge_cut(g, p) == 0);
}

TEST_CASE("multilevel path of 4 reaches the optimal cut") {
  const Graph g = path(4);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Partition p = partition_multilevel(g, 2, 0.1, seed);
    check_cover(g, p);
    CHECK(edge_cut(g, p) == 1);  // brute force optimum for balanced halves
    CHECK(p.base_assignment[0] == p.base_assignment[1]);
    CHECK(p.base_assignment[2] == p.base_assignment[3]);
  }
  CHECK(oracle::min_balanced_cut(g, 2, 3) == 1);
}

TEST_CASE("multilevel respects balance and covers on random graphs") {
  Rng rng(41);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 30 + static_cast<int>(rng.uniform_int(200));
    const Graph g = erdos_renyi(n, 6.0 / n, rng.next());
    const int c = 2 + static_cast<int>(rng.uniform_int(7));
    const Partition p = partition_multilevel(g, c, 0.1, rng.next());
    check_cover(g, p);
    const std::int64_t cap = static_cast<std::int64_t>(std::floor(1.1 * std::ceil(double(n) / c)));
    for (const auto& blk : p.blocks)
      CHECK(static_cast<std::int64_t>(blk.size()) <= cap);
  }
}

TEST_CASE("multilevel determinism and error cases") {
  const Graph g = erdos_renyi(50, 0.1, 9);
  const Partition a = partition_multilevel(g, 4, 11);
  const Partition b = partition_multilevel(g, 4, 11);
  CHECK(a.base_assignment == b.base_assignment);
  CHECK_THROWS_AS(partition_multilevel(g, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(partition_multilevel(g, 51, 1), std::invalid_argument);
}

TEST_CASE("random partition: C=n gives singletons") {
  const Graph g = path(6);
  const Partition p = partition_random(g, 6, 3);
  check_cover(g, p);
  for (const auto& blk : p.blocks) CHECK(blk.size() == 1);
}

TEST_CASE("louvain separates two cliques") {
  // Two 5-cliques joined by one edge.
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j) {
      e.emplace_back(i, j);
      e.emplace_back(5 + i, 5 + j);
    }
  e.emplace_back(4, 5);
  const Graph g = from_edge_list(10, e);
  const Partition p = partition_louvain(g, 2, 5);
  check_cover(g, p);
  // Modularity oracle over all 2-way splits.
  const double got = modularity(g, p.base_assignment);
  const double best = oracle::best_two_way_modularity(
      g, [&](const std::vector<int>& a) { return modularity(g, a); });
  CHECK(got == doctest::Approx(best).epsilon(1e-9));
  CHECK(p.base_assignment[0] == p.base_assignment[4]);
  CHECK(p.base_assignment[5] == p.base_assignment[9]);
  CHECK(p.base_assignment[0] != p.base_assignment[5]);
}

TEST_CASE("louvain hits exact C_target via merge or split") {
  const Graph g = erdos_renyi(60, 0.1, 5);
  for (int target : {2, 5, 12, 30}) {
    const Partition p = partition_louvain(g, target, 8);
    CHECK(p.C == target);
    check_cover(g, p);
  }
}

TEST_CASE("bfs partition on a path gives contiguous halves") {
  const Graph g = path(10);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Partition p = partition_bfs(g, 2, seed);
    check_cover(g, p);
    CHECK(edge_cut(g, p) == 1);  // enumeration: contiguous halves are optimal
    for (const auto& blk : p.blocks) {
      for (std::size_t i = 1; i < blk.size(); ++i) CHECK(blk[i] == blk[i - 1] + 1);
    }
  }
}

TEST_CASE("all partitioners cover all graphs") {
  Rng rng(77);
  for (int trial = 0; trial < 4; ++trial) {
    const int n = 20 + static_cast<int>(rng.uniform_int(60));
    const Graph g = erdos_renyi(n, 4.0 / n, rng.next());  // may be disconnected
    const int c = 2 + static_cast<int>(rng.uniform_int(5));
    check_cover(g, partition_multilevel(g, c, 0.1, rng.next()));
    check_cover(g, partition_random(g, c, rng.next()));
    check_cover(g, partition_louvain(g, c, rng.next()));
    check_cover(g, partition_bfs(g, c, rng.next()));
  }
}

TEST_CASE("expand_k_hop basics") {
  const Graph g = path(3);  // a - b - c
  Partition base;
  base.C = 2;
  base.k_hop = 0;
  base.base_assignment = {0, 1, 1};
  base.blocks = {{0}, {1, 2}};
  base.validate(g);

  const Partition k0 = expand_k_hop(g, base, 0);
  CHECK(k0.blocks == base.blocks);

  const Partition k1 = expand_k_hop(g, base, 1);
  CHECK(k1.blocks[0] == std::vector<int>{0, 1});
  CHECK(k1.blocks[1] == std::vector<int>{0, 1, 2});
  CHECK(k1.base_assignment == base.base_assignment);
}

TEST_CASE("expand_k_hop saturates at the diameter and is monotone") {
  const Graph g = erdos_renyi(30, 0.15, 13);
  if (!is_connected(g)) return;
  const Partition p = partition_multilevel(g, 4, 3);
  std::vector<std::vector<int>> prev = p.blocks;
  for (int k = 1; k <= 30; ++k) {
    const Partition e = expand_k_hop(g, p, k);
    for (int b = 0; b < p.C; ++b) {
      CHECK(std::includes(e.blocks[static_cast<std::size_t>(b)].begin(), e.blocks[static_cast<std::size_t>(b)].end(),
                          prev[static_cast<std::size_t>(b)].begin(), prev[static_cast<std::size_t>(b)].end()));
    }
    prev = e.blocks;
  }
  const Partition full = expand_k_hop(g, p, 30);
  for (const auto& blk : full.blocks) CHECK(static_cast<int>(blk.size()) == g.num_nodes);
}

TEST_CASE("edge_cut matches a brute-force pair scan") {
  Rng rng(23);
  const Graph g = erdos_renyi(40, 0.12, 5);
  const Partition p = partition_random(g, 5, 2);
  std::int64_t brute = 0;
  for (int u = 0; u < g.num_nodes; ++u)
    for (int v = u + 1; v < g.num_nodes; ++v)
      if (g.has_edge(u, v) &&
          p.base_assignment[static_cast<std::size_t>(u)] != p.base_assignment[static_cast<std::size_t>(v)])
        brute++;
  CHECK(edge_cut(g, p) == brute);
  CHECK(edge_cut(g, partition_multilevel(g, 1, 1)) == 0);
}

TEST_CASE("coarsened adjacency: edge-count semantics") {
  const Graph g = path(4);
  Partition p;
  p.C = 2;
  p.base_assignment = {0, 0, 1, 1};
  p.blocks = {{0, 1}, {2, 3}};
  const Matrix a = coarsened_adjacency(g, p);
  CHECK(a(0, 1) == 1.0);
  CHECK(a(1, 0) == 1.0);
  CHECK(a(0, 0) == 2.0);  // one internal edge counted in both directions

  const Graph tt = two_triangles();
  Partition q;
  q.C = 2;
  q.base_assignment = {0, 0, 0, 1, 1, 1};
  q.blocks = {{0, 1, 2}, {3, 4, 5}};
  const Matrix b = coarsened_adjacency(tt, q);
  CHECK(b(0, 1) == 0.0);

  const Partition whole = partition_multilevel(tt, 1, 1);
  const Matrix w = coarsened_adjacency(tt, whole);
  CHECK(w(0, 0) == 2.0 * tt.num_edges());
}

TEST_CASE("coarsened adjacency off-diagonal sum equals twice the cut") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const Graph g = erdos_renyi(50, 0.1, rng.next());
    const Partition p = partition_multilevel(g, 5, rng.next());
    const Matrix a = coarsened_adjacency(g, p);
    double off = 0.0;
    for (int i = 0; i < a.rows; ++i)
      for (int j = 0; j < a.cols; ++j)
        if (i != j) off += a(i, j);
    CHECK(off == doctest::Approx(2.0 * static_cast<double>(edge_cut(g, p))));
  }
}

TEST_CASE("coarsened adjacency shared-node mode counts overlaps") {
  const Graph g = path(3);
  Partition p;
  p.C = 2;
  p.k_hop = 1;
  p.base_assignment = {0, 1, 1};
  p.blocks = {{0, 1}, {0, 1, 2}};
  const Matrix m = coarsened_adjacency(g, p, CoarseMode::SharedNodes);
  CHECK(m(0, 0) == 2.0);
  CHECK(m(1, 1) == 3.0);
  CHECK(m(0, 1) == 2.0);
  CHECK(m(1, 0) == 2.0);
}

TEST_SUITE_END();
