// Microbenchmarks for the hot paths: forward evaluation, the fused
// cross-entropy gradient, the batched curvature-diagonal estimate, and one
// full saliency pass. Run with --benchmark_filter=... to narrow.

#include <benchmark/benchmark.h>

#include "prunelab/loss_model.hpp"
#include "prunelab/pruner.hpp"

#include <random>

namespace {

using namespace prunelab;

struct BenchSetup {
  Network net;
  Mask mask;
  Batch batch;

  BenchSetup(int d, int n) : net(Network::glorot_init({d, 300, 100, 10},
                                                      {Activation::Tanh, Activation::Tanh,
                                                       Activation::Identity},
                                                      1)),
                             mask(Mask::ones(net.param_count())) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    batch.inputs.resize(n, d);
    batch.targets.resize(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) batch.inputs(i, j) = u(rng);
      batch.targets[i] = i % 10;
    }
  }
};

void bm_forward(benchmark::State& state) {
  BenchSetup s(144, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(forward(s.net, s.mask, s.batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_forward)->Arg(100)->Arg(1000);

void bm_gradient(benchmark::State& state) {
  BenchSetup s(144, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(gradient(s.net, s.mask, s.batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_gradient)->Arg(100)->Arg(1000);

void bm_curvature_diagonal(benchmark::State& state) {
  BenchSetup s(144, static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_stats(s.net, s.mask, s.batch, /*need_ggn=*/true));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_curvature_diagonal)->Arg(100)->Arg(1000);

void bm_saliency_pass(benchmark::State& state) {
  BenchSetup s(144, 1000);
  const LossModelStats stats = estimate_stats(s.net, s.mask, s.batch, true);
  const Criterion crit{CriterionKind::QM, 1e-2};
  for (auto _ : state)
    benchmark::DoNotOptimize(saliencies(crit, s.net.params(), s.mask, stats));
}
BENCHMARK(bm_saliency_pass);

void bm_prune_iteration(benchmark::State& state) {
  BenchSetup s(144, 1000);
  const LossModelStats stats = estimate_stats(s.net, s.mask, s.batch, true);
  PruneConfig cfg;
  cfg.criterion = {CriterionKind::QM, 1e-2};
  cfg.kappa = 0.9;
  for (auto _ : state)
    benchmark::DoNotOptimize(prune_iteration(s.net, s.mask, cfg, 1, stats));
}
BENCHMARK(bm_prune_iteration);

}  // namespace

BENCHMARK_MAIN();
