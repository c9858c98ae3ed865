#include <benchmark/benchmark.h>

#include "fn/generators.hpp"
#include "fn/partition.hpp"

namespace {

void BM_MultilevelPartition(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const fn::Graph g = fn::erdos_renyi(n, 5.0 / n, 7);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto p = fn::partition_multilevel(g, 32, 0.1, seed++);
    benchmark::DoNotOptimize(p.base_assignment.data());
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_MultilevelPartition)->Arg(1000)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond)->Complexity();

void BM_LouvainPartition(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const fn::Graph g = fn::erdos_renyi(n, 5.0 / n, 7);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto p = fn::partition_louvain(g, 32, seed++);
    benchmark::DoNotOptimize(p.base_assignment.data());
  }
}
BENCHMARK(BM_LouvainPartition)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_KHopExpansion(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const fn::Graph g = fn::erdos_renyi(n, 5.0 / n, 7);
  const fn::Partition p = fn::partition_multilevel(g, 32, 0.1, 3);
  for (auto _ : state) {
    auto e = fn::expand_k_hop(g, p, 1);
    benchmark::DoNotOptimize(e.blocks.data());
  }
}
BENCHMARK(BM_KHopExpansion)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
