// Serial reference path vs OpenMP path for each parallel kernel. The second
// benchmark argument selects the path: 0 serial, 1 parallel.
#include <benchmark/benchmark.h>

#include "symbnn/analysis.hpp"
#include "symbnn/chains.hpp"
#include "symbnn/data.hpp"
#include "symbnn/model.hpp"
#include "symbnn/removal.hpp"
#include "symbnn/sampler.hpp"
#include "symbnn/symmetry.hpp"

using namespace symbnn;

namespace {

Execution exec_of(const benchmark::State &state) { return state.range(1) == 0 ? Execution::serial : Execution::parallel; }

const Split &sinusoid() {
  static const Split s = split_standardize(gen_sinusoidal(64, 1), 0.8, 1);
  return s;
}

SampleSet random_samples(const Architecture &arch, int n, std::uint64_t seed) {
  Rng rng(seed);
  SampleSet s;
  s.arch = arch;
  for (int g = 0; g < n; ++g) {
    ParamState st = sample_prior(arch, rng);
    st.log_sigma = -1.0;
    s.add(st, {g, seed, 0});
  }
  return s;
}

void BM_RunChains(benchmark::State &state) {
  const Architecture arch({1, 3, 1});
  const MlpPosterior post(arch, sinusoid().train.regression());
  SamplerConfig cfg;
  cfg.warmup_steps = 128;
  for (auto _ : state) benchmark::DoNotOptimize(run_chains(post, cfg, static_cast<int>(state.range(0)), 1, exec_of(state)));
}
BENCHMARK(BM_RunChains)->Args({16, 0})->Args({16, 1})->Unit(benchmark::kMillisecond);

void BM_PpdGrid(benchmark::State &state) {
  const SampleSet s = random_samples(Architecture({1, 3, 1}), static_cast<int>(state.range(0)), 2);
  const GridSpec grid;
  for (auto _ : state) benchmark::DoNotOptimize(ppd_grid(s, grid, exec_of(state)));
}
BENCHMARK(BM_PpdGrid)->Args({256, 0})->Args({256, 1})->Unit(benchmark::kMillisecond);

void BM_KlConsecutive(benchmark::State &state) {
  const SampleSet s = random_samples(Architecture({1, 3, 1}), static_cast<int>(state.range(0)), 3);
  const GridSpec grid;
  for (auto _ : state) benchmark::DoNotOptimize(kl_consecutive(s, grid, exec_of(state)));
}
BENCHMARK(BM_KlConsecutive)->Args({128, 0})->Args({128, 1})->Unit(benchmark::kMillisecond);

void BM_Lppd(benchmark::State &state) {
  const SampleSet s = random_samples(Architecture({1, 3, 1}), static_cast<int>(state.range(0)), 4);
  const RegressionData test = sinusoid().test.regression();
  for (auto _ : state) benchmark::DoNotOptimize(lppd(s, test, exec_of(state)));
}
BENCHMARK(BM_Lppd)->Args({1024, 0})->Args({1024, 1})->Unit(benchmark::kMicrosecond);

void BM_GeometryRemoval(benchmark::State &state) {
  const Architecture arch({1, 3, 1});
  Rng rng(5);
  SampleSet base;
  base.arch = arch;
  for (int b = 0; b < 3; ++b) {
    const ParamState st = sample_prior(arch, rng);
    for (int c = 0; c < state.range(0) / 3; ++c) base.add({apply_transform(arch, st.theta, random_transform(arch, rng)), -1.0}, {});
  }
  RemovalConfig cfg;
  cfg.exec = exec_of(state);
  for (auto _ : state) {
    SampleSet s = base;
    Rng r(6);
    benchmark::DoNotOptimize(geometry_removal(s, cfg, r));
  }
}
BENCHMARK(BM_GeometryRemoval)->Args({192, 0})->Args({192, 1})->Unit(benchmark::kMillisecond);

void BM_CouponOracle(benchmark::State &state) {
  const ModeSpec spec({0.57, 0.35, 0.08});
  for (auto _ : state) benchmark::DoNotOptimize(mc_oracle_expected_chains(spec, state.range(0), 7, exec_of(state)));
}
BENCHMARK(BM_CouponOracle)->Args({200000, 0})->Args({200000, 1})->Unit(benchmark::kMillisecond);

void BM_DeepEnsemble(benchmark::State &state) {
  const Architecture arch({1, 3, 1});
  const RegressionData train = sinusoid().train.regression();
  MapConfig cfg;
  cfg.steps = 200;
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < state.range(0); ++i) seeds.push_back(static_cast<std::uint64_t>(i));
  for (auto _ : state) benchmark::DoNotOptimize(deep_ensemble(train, arch, seeds, cfg, exec_of(state)));
}
BENCHMARK(BM_DeepEnsemble)->Args({10, 0})->Args({10, 1})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
