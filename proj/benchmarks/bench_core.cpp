#include <benchmark/benchmark.h>

#include "fairimb/dataset.hpp"
#include "fairimb/inlp.hpp"
#include "fairimb/losses.hpp"
#include "fairimb/metrics.hpp"
#include "fairimb/model.hpp"
#include "fairimb/rng.hpp"

using namespace fairimb;

namespace {

LabeledGroupedDataset bench_data(std::int64_t n, int dim, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.dim = dim;
  spec.class_separation = 2.0;
  spec.group_shift = 1.5;
  spec.noise_std = 1.0;
  spec.ratios.positive_fraction = 0.7;
  spec.ratios.stereotype = Matrix(2, 2, 0.5);
  spec.ratios.target_size = n;
  return generate_synthetic(spec, seed);
}

void BM_GenerateSynthetic(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(bench_data(state.range(0), 16, 7));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GenerateSynthetic)->Arg(1000)->Arg(10000);

void BM_CompositeGradient(benchmark::State& state) {
  const auto data = bench_data(64, 32, 3);
  const auto counts = compute_counts(data);
  const auto params = init_params(32, 64, 2, 2, false, 1.0, 5);
  const Batch batch = full_batch(data);
  LossSpec spec;
  spec.variant = LossVariant::LdamReg;
  spec.margin_scale = 1.0;
  spec.mmd_weight = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(gradient(params, batch, spec, counts));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_CompositeGradient);

void BM_TrainEpoch(benchmark::State& state) {
  const auto data = bench_data(1024, 16, 9);
  LossSpec spec;
  spec.variant = LossVariant::Ldam;
  spec.margin_scale = 1.0;
  TrainConfig config;
  config.hidden_dim = 32;
  config.epochs = 1;
  config.batch_size = 64;
  for (auto _ : state) benchmark::DoNotOptimize(train(data, data, spec, config));
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_TrainEpoch);

void BM_InlpIteration(benchmark::State& state) {
  Rng rng(11);
  const int n = 1000, h = 64;
  Matrix reps(n, h);
  std::vector<int> groups(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < h; ++j) reps(i, j) = rng.normal();
    groups[i] = reps(i, 0) > 0 ? 1 : 0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(inlp_run(reps, groups, 1, 0.0));
}
BENCHMARK(BM_InlpIteration);

void BM_ParetoFrontier(benchmark::State& state) {
  Rng rng(13);
  std::vector<TradeoffPoint> points;
  for (int i = 0; i < state.range(0); ++i)
    points.push_back({rng.uniform01(), rng.uniform01(), "p" + std::to_string(i)});
  for (auto _ : state) benchmark::DoNotOptimize(pareto_frontier(points));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ParetoFrontier)->Arg(256)->Arg(2048);

}  // namespace

BENCHMARK_MAIN();
