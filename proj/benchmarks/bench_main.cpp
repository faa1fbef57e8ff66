#include <benchmark/benchmark.h>

#include "zsep/analytic_denoiser.hpp"
#include "zsep/inversion.hpp"
#include "zsep/metrics.hpp"
#include "zsep/random.hpp"
#include "zsep/tiny_denoiser.hpp"

namespace {

using namespace zsep;

const GridDims kDims{1, 16, 32};

FeatureGrid noise(std::uint64_t seed) {
  FeatureGrid g(kDims);
  Rng rng(seed);
  fill_normal(rng, g);
  return g;
}

TinyDenoiser make_tiny(int hidden) {
  TinyDenoiserSpec spec;
  spec.hidden = hidden;
  return TinyDenoiser(init_tiny_params(spec, kDims, default_conditions(LabelRegistry::default_registry()), 1.0, 1),
                      default_schedule());
}

GaussianSourceModel fitted_model() {
  const auto data = make_dataset(LabelRegistry::default_registry().labels(), 16, true, kDims, 3);
  return GaussianSourceModel::fit(data);
}

void BM_TinyForward(benchmark::State& state) {
  const TinyDenoiser d = make_tiny(static_cast<int>(state.range(0)));
  const FeatureGrid x = noise(2);
  for (auto _ : state) benchmark::DoNotOptimize(d.predict_eps(x, Condition::label(1), 400));
}
BENCHMARK(BM_TinyForward)->Arg(16)->Arg(64)->Arg(256);

void BM_AnalyticEps(benchmark::State& state) {
  const NoiseSchedule s = default_schedule();
  const AnalyticDenoiser d(fitted_model(), s);
  const FeatureGrid x = noise(2);
  for (auto _ : state) benchmark::DoNotOptimize(d.predict_eps(x, Condition::null(), 400));
}
BENCHMARK(BM_AnalyticEps);

void BM_CfgEps(benchmark::State& state) {
  const TinyDenoiser d = make_tiny(64);
  const FeatureGrid x = noise(3);
  const GuidanceConfig g{1.5, Condition::label(0)};
  for (auto _ : state) benchmark::DoNotOptimize(cfg_eps(d, x, 300, g));
}
BENCHMARK(BM_CfgEps);

void BM_DdpmInvert(benchmark::State& state) {
  const NoiseSchedule s = default_schedule();
  const TinyDenoiser d = make_tiny(64);
  const StepPlan plan = StepPlan::uniform(1000, static_cast<int>(state.range(0)));
  const FeatureGrid x0 = noise(4);
  for (auto _ : state) benchmark::DoNotOptimize(ddpm_invert(d, s, plan, x0, Condition::null(), 5));
}
BENCHMARK(BM_DdpmInvert)->Arg(10)->Arg(50);

void BM_FeatureEmbed(benchmark::State& state) {
  const FeatureGrid x = noise(5);
  for (auto _ : state) benchmark::DoNotOptimize(feature_embed(x));
}
BENCHMARK(BM_FeatureEmbed);

}  // namespace
BENCHMARK_MAIN();
