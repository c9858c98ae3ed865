#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fn/graph.hpp"
#include "fn/graph_io.hpp"
#include "fn/rng.hpp"
#include "oracles.hpp"

using namespace fn;

TEST_SUITE_BEGIN("graph");

TEST_CASE("from_edge_list builds K3") {
  const Graph g = from_edge_list(3, {{0, 1}, {1, 2}, {0, 2}});
  g.validate();
  CHECK(g.num_nodes == 3);
  CHECK(g.num_edges() == 3);
  for (int v = 0; v < 3; ++v) CHECK(g.degree(v) == 2);
}

TEST_CASE("singleton graph") {
  const Graph g = from_edge_list(1, std::vector<std::pair<int, int>>{});
  g.validate();
  CHECK(g.num_nodes == 1);
  CHECK(g.degree(0) == 0);
}

TEST_CASE("duplicate edges collapse") {
  const Graph g = from_edge_list(4, {{0, 1}, {0, 1}, {1, 2}});
  g.validate();
  CHECK(g.num_edges() == 2);
}

TEST_CASE("self-loop and range errors") {
  CHECK_THROWS_AS(from_edge_list(3, {{1, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(from_edge_list(3, {{0, 3}}), std::invalid_argument);
  CHECK_THROWS_AS(from_edge_list(3, {{-1, 0}}), std::invalid_argument);
}

TEST_CASE("bfs distances on a path and disconnection") {
  const Graph g = from_edge_list(3, {{0, 1}, {1, 2}});
  const auto d = bfs_distances(g, 0);
  CHECK(d[0] == 0.0);
  CHECK(d[1] == 1.0);
  CHECK(d[2] == 2.0);

  const Graph h = from_edge_list(4, {{0, 1}, {2, 3}});
  const auto dh = bfs_distances(h, 0);
  CHECK(std::isinf(dh[2]));
  CHECK(std::isinf(dh[3]));
}

TEST_CASE("bfs matches Floyd-Warshall on random graphs") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 20 + static_cast<int>(rng.uniform_int(30));
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (rng.uniform() < 0.08) edges.emplace_back(u, v);
    const Graph g = from_edge_list(n, edges);
    const auto fw = oracle::floyd_warshall(g);
    const int src = static_cast<int>(rng.uniform_int(n));
    const auto d = bfs_distances(g, src);
    for (int v = 0; v < n; ++v) CHECK(d[static_cast<std::size_t>(v)] == fw[src][v]);
  }
}

TEST_CASE("degree sum equals twice the edge count") {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::pair<int, int>> edges;
    const int n = 10 + static_cast<int>(rng.uniform_int(40));
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (rng.uniform() < 0.1) edges.emplace_back(u, v);
    const Graph g = from_edge_list(n, edges);
    std::int64_t total = 0;
    for (int v = 0; v < n; ++v) total += g.degree(v);
    CHECK(total == 2 * g.num_edges());
  }
}

TEST_CASE("edge-list round trip is bit-exact") {
  Rng rng(17);
  Matrix feats(6, 3);
  for (double& x : feats.data) x = rng.normal() * std::pow(10.0, rng.uniform(-8, 8));
  Graph g = from_edge_list(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}, {1, 4}}, &feats);
  g.node_labels = {0, 1, -1, 2, 1, 0};

  const std::string path = (std::filesystem::temp_directory_path() / "fnmp_roundtrip.el").string();
  write_edge_list(g, path);
  write_labels(g, path + ".labels");
  const Graph back = read_edge_list(path);
  back.validate();
  REQUIRE(back.num_nodes == g.num_nodes);
  CHECK(back.offsets == g.offsets);
  CHECK(back.neighbors == g.neighbors);
  REQUIRE(back.node_features.data.size() == g.node_features.data.size());
  for (std::size_t i = 0; i < g.node_features.data.size(); ++i)
    CHECK(back.node_features.data[i] == g.node_features.data[i]);
  CHECK(back.node_labels == g.node_labels);
}

TEST_CASE("permute and induced subgraph keep structure") {
  const Graph g = from_edge_list(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  Rng rng(3);
  const auto perm = rng.permutation(5);
  const Graph pg = permute_graph(g, perm);
  pg.validate();
  CHECK(pg.num_edges() == g.num_edges());
  for (int v = 0; v < 5; ++v)
    CHECK(pg.degree(perm[static_cast<std::size_t>(v)]) == g.degree(v));

  const std::vector<int> nodes = {1, 2, 3};
  const Graph sub = induced_subgraph(g, nodes);
  sub.validate();
  CHECK(sub.num_nodes == 3);
  CHECK(sub.num_edges() == 2);
}

TEST_CASE("disjoint union concatenates graphs") {
  const Graph a = from_edge_list(3, {{0, 1}, {1, 2}});
  const Graph b = from_edge_list(2, {{0, 1}});
  std::vector<Graph> gs = {a, b};
  std::vector<int> offsets;
  const Graph u = disjoint_union(gs, &offsets);
  u.validate();
  CHECK(u.num_nodes == 5);
  CHECK(u.num_edges() == 3);
  CHECK(offsets == std::vector<int>{0, 3});
  CHECK(u.has_edge(3, 4));
  CHECK(!u.has_edge(2, 3));
}

TEST_CASE("dataset split validation") {
  Dataset ds;
  ds.graphs.push_back(from_edge_list(2, {{0, 1}}));
  ds.graphs.push_back(from_edge_list(2, {{0, 1}}));
  ds.train_idx = {0};
  ds.val_idx = {1};
  CHECK_NOTHROW(ds.validate());
  ds.test_idx = {1};
  CHECK_THROWS_AS(ds.validate(), std::logic_error);
}

TEST_SUITE_END();
