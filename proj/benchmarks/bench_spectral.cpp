#include <benchmark/benchmark.h>

#include "fn/generators.hpp"
#include "fn/partition.hpp"
#include "fn/spectral.hpp"

namespace {

fn::Graph connected(int n, double p) {
  std::uint64_t seed = 11;
  fn::Graph g = fn::erdos_renyi(n, p, seed);
  while (!fn::is_connected(g)) g = fn::erdos_renyi(n, p, ++seed);
  return g;
}

void BM_Pseudoinverse(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const fn::Graph g = connected(n, 8.0 / n);
  const fn::Matrix l = fn::laplacian(g, false);
  for (auto _ : state) {
    auto p = fn::pseudoinverse(l);
    benchmark::DoNotOptimize(p.data.data());
  }
}
BENCHMARK(BM_Pseudoinverse)->Arg(50)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_ResistanceReport(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const fn::Graph g = connected(n, 8.0 / n);
  const fn::Partition p = fn::expand_k_hop(g, fn::partition_multilevel(g, 4, 0.1, 3), 1);
  for (auto _ : state) {
    auto rep = fn::resistance_report(g, p, 40, 5);
    benchmark::DoNotOptimize(rep.pairs.data());
  }
}
BENCHMARK(BM_ResistanceReport)->Arg(40)->Arg(150)->Unit(benchmark::kMillisecond);

void BM_Betweenness(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const fn::Graph g = connected(n, 6.0 / n);
  for (auto _ : state) {
    auto b = fn::betweenness(g);
    benchmark::DoNotOptimize(b.data());
  }
}
BENCHMARK(BM_Betweenness)->Arg(150)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_KsSimilarity(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const fn::Graph g = connected(n, 5.0 / n);
  const fn::Partition p = fn::expand_k_hop(g, fn::partition_multilevel(g, 8, 0.1, 3), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fn::ks_similarity(g, p));
  }
}
BENCHMARK(BM_KsSimilarity)->Arg(150)->Unit(benchmark::kMillisecond);

}  // namespace
