#include <doctest.h>

#include <cmath>
#include <set>

#include "fn/generators.hpp"
#include "fn/matrix.hpp"
#include "fn/spectral.hpp"
#include "oracles.hpp"

#include <Eigen/Dense>

using namespace fn;

TEST_SUITE_BEGIN("generators");

TEST_CASE("erdos_renyi extremes") {
  CHECK(erdos_renyi(20, 0.0, 1).num_edges() == 0);
  CHECK(erdos_renyi(5, 1.0, 1).num_edges() == 10);
}

TEST_CASE("erdos_renyi determinism") {
  const Graph a = erdos_renyi(200, 0.03, 42);
  const Graph b = erdos_renyi(200, 0.03, 42);
  CHECK(a.neighbors == b.neighbors);
  const Graph c = erdos_renyi(200, 0.03, 43);
  CHECK(a.neighbors != c.neighbors);
}

TEST_CASE("erdos_renyi edge counts match binomial statistics") {
  const int n = 1000;
  const double p = 0.005;
  const double pairs = 0.5 * n * (n - 1);
  double total = 0.0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) total += static_cast<double>(erdos_renyi(n, p, 1000 + s).num_edges());
  const double mean = total / seeds;
  const double expect = p * pairs;
  const double sigma = std::sqrt(pairs * p * (1 - p) / seeds);  // std of the mean
  CHECK(std::abs(mean - expect) < 3.0 * sigma);
}

TEST_CASE("tree_neighbours_match shapes and determinism") {
  const Dataset d2 = tree_neighbours_match(2, 4, 9);
  for (const auto& g : d2.graphs) {
    CHECK(g.num_nodes == 7);
    int leaves = 0;
    for (int v = 0; v < g.num_nodes; ++v) leaves += g.degree(v) == 1;
    CHECK(leaves == 4);
    g.validate();
  }
  const Dataset a = tree_neighbours_match(1, 10, 5);
  const Dataset b = tree_neighbours_match(1, 10, 5);
  REQUIRE(a.graphs.size() == b.graphs.size());
  for (std::size_t i = 0; i < a.graphs.size(); ++i) {
    CHECK(a.graphs[i].node_features.data == b.graphs[i].node_features.data);
    CHECK(a.graphs[i].node_labels == b.graphs[i].node_labels);
  }
}

TEST_CASE("tree_neighbours_match labels are uniform over leaves") {
  const int r = 3, samples = 1000;
  const Dataset ds = tree_neighbours_match(r, samples, 31);
  std::vector<std::int64_t> counts(8, 0);
  for (const auto& g : ds.graphs) {
    REQUIRE(!g.node_labels.empty());
    const int label = g.node_labels[0];
    REQUIRE(label >= 0);
    REQUIRE(label < 8);
    counts[static_cast<std::size_t>(label)]++;
  }
  // chi-square with 7 dof at alpha = 0.01
  CHECK(oracle::chi_square_statistic(counts, samples / 8.0) < 18.475);
}

TEST_CASE("tree_neighbours_match rejects absurd sizes") {
  CHECK_THROWS_AS(tree_neighbours_match(0, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(tree_neighbours_match(14, 100000, 1), std::invalid_argument);
}

TEST_CASE("csl_graphs basic contract") {
  const Dataset ds = csl_graphs(41, csl_default_skips(), 15, 7);
  CHECK(ds.graphs.size() == 150);
  CHECK(ds.num_classes == 10);
  for (const auto& g : ds.graphs) {
    for (int v = 0; v < g.num_nodes; ++v) CHECK(g.degree(v) == 4);
  }
}

TEST_CASE("csl same-class copies are isomorphic: degree sequence and spectrum") {
  const Dataset ds = csl_graphs(41, {2, 9}, 2, 3);
  REQUIRE(ds.graphs.size() == 4);
  for (int cls = 0; cls < 2; ++cls) {
    const Graph& a = ds.graphs[static_cast<std::size_t>(2 * cls)];
    const Graph& b = ds.graphs[static_cast<std::size_t>(2 * cls + 1)];
    auto spectrum = [](const Graph& g) {
      const Matrix l = laplacian(g, false);
      Eigen::MatrixXd e(l.rows, l.cols);
      for (int i = 0; i < l.rows; ++i)
        for (int j = 0; j < l.cols; ++j) e(i, j) = l(i, j);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e);
      return es.eigenvalues();
    };
    const auto sa = spectrum(a);
    const auto sb = spectrum(b);
    for (Eigen::Index i = 0; i < sa.size(); ++i) CHECK(std::abs(sa(i) - sb(i)) < 1e-9);
  }
}

TEST_CASE("csl rejects invalid skips") {
  CHECK_THROWS_AS(csl_graphs(41, {1}, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(csl_graphs(40, {20}, 1, 1), std::invalid_argument);
}

TEST_SUITE_END();
