#include <benchmark/benchmark.h>

#include "fn/generators.hpp"
#include "fn/model.hpp"
#include "fn/rng.hpp"
#include "fn/train.hpp"

namespace {

struct Fixture {
  fn::Graph g;
  fn::Model model;
  fn::GraphContext ctx;
  fn::Batch batch;
};

Fixture make_fixture(int n, fn::Variant variant) {
  fn::ModelConfig cfg;
  cfg.variant = variant;
  cfg.layers = 3;
  cfg.dim_h = 64;
  cfg.C = 32;
  cfg.k_hop = 1;
  cfg.out_dim = 2;
  fn::Rng rng(5);
  Fixture f{fn::erdos_renyi(n, 5.0 / n, 3), fn::Model::init(cfg, 16, 0, 7), {}, {}};
  f.g.node_features = fn::Matrix(n, 16);
  for (double& x : f.g.node_features.data) x = rng.normal();
  f.g.graph_label = 0;
  f.ctx = fn::prepare_graph(f.g, cfg, 9);
  f.ctx.g = &f.g;
  f.batch = fn::make_batch({&f.ctx}, cfg, false, nullptr);
  return f;
}

void BM_ForwardBackward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto variant = state.range(1) == 0 ? fn::Variant::Plain : fn::Variant::FN;
  Fixture f = make_fixture(n, variant);
  for (auto _ : state) {
    fn::ad::Tape tape;
    fn::BoundModel bm = fn::bind(f.model, tape, true);
    auto out = fn::forward(bm, f.batch);
    auto loss = fn::loss_op(tape, out.predictions, f.batch, fn::LossKind::CrossEntropy);
    tape.backward(loss);
    benchmark::DoNotOptimize(tape.grad(bm.vars[0]).v.data());
  }
}
BENCHMARK(BM_ForwardBackward)
    ->Args({1000, 0})
    ->Args({1000, 1})
    ->Args({10000, 0})
    ->Args({10000, 1})
    ->Unit(benchmark::kMillisecond);

void BM_InferenceOnly(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Fixture f = make_fixture(n, fn::Variant::FN_M);
  for (auto _ : state) {
    fn::ad::Tape tape;
    fn::BoundModel bm = fn::bind(f.model, tape, false);
    auto out = fn::forward(bm, f.batch);
    benchmark::DoNotOptimize(tape.val(out.predictions).v.data());
  }
}
BENCHMARK(BM_InferenceOnly)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
