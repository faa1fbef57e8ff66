#include <gtest/gtest.h>

#include <cmath>

#include "test_helpers.hpp"
#include "zsep/metrics.hpp"
#include "zsep/sampler.hpp"

using namespace zsep;
using namespace zsep::testing;

namespace {
const GridDims kDims{1, 2, 4};
}

TEST(CfgEps, AffineCombinationOfScalars) {
  const ConstantDenoiser d(kDims, 2.0, 4.0);
  const FeatureGrid x(kDims);
  EXPECT_EQ(cfg_eps(d, x, 5, {0.5, Condition::label(0)})[0], 3.0);
  EXPECT_EQ(cfg_eps(d, x, 5, {2.0, Condition::label(0)})[0], 6.0);
}

TEST(CfgEps, EndpointsSkipTheOtherBranch) {
  const NoiseSchedule s = default_schedule();
  const AnalyticDenoiser inner(half_split_model(kDims), s);
  CountingDenoiser d(inner);
  const FeatureGrid x = random_grid(kDims, 3);
  const Condition c = Condition::label(1);

  EXPECT_EQ(cfg_eps(d, x, 123, {0.0, c}), inner.predict_eps(x, Condition::null(), 123));
  EXPECT_EQ(d.null_calls(), 1u);
  EXPECT_EQ(d.conditional_calls(), 0u);
  d.reset();
  EXPECT_EQ(cfg_eps(d, x, 123, {1.0, c}), inner.predict_eps(x, c, 123));
  EXPECT_EQ(d.null_calls(), 0u);
  EXPECT_EQ(d.conditional_calls(), 1u);
  d.reset();
  cfg_eps(d, x, 123, {0.5, c});
  EXPECT_EQ(d.null_calls(), 1u);
  EXPECT_EQ(d.conditional_calls(), 1u);
  EXPECT_THROW(cfg_eps(d, x, 123, {-0.1, c}), std::invalid_argument);
}

TEST(CfgEps, AffineInOmega) {
  const NoiseSchedule s = default_schedule();
  const AnalyticDenoiser d(half_split_model(kDims), s);
  const FeatureGrid x = random_grid(kDims, 5);
  const Condition c = Condition::label(0);
  for (auto [a, b] : {std::pair{0.0, 2.0}, std::pair{0.3, 1.7}, std::pair{1.0, 1.5}}) {
    const FeatureGrid lhs = cfg_eps(d, x, 40, {a, c}) + cfg_eps(d, x, 40, {b, c});
    const FeatureGrid rhs = 2.0 * cfg_eps(d, x, 40, {(a + b) / 2, c});
    EXPECT_LT(max_abs_diff(lhs, rhs), 1e-12);
  }
}

TEST(DdimStep, ZeroNoiseRescales) {
  const NoiseSchedule s = default_schedule();
  const FeatureGrid x = random_grid(kDims, 1);
  const FeatureGrid out = ddim_step(s, x, 500, 300, FeatureGrid(kDims));
  const double k = std::sqrt(s.alpha_bar(300) / s.alpha_bar(500));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(out[i], k * x[i], 1e-12);
}

TEST(DdimStep, NearEqualAlphaBarIsNearIdentity) {
  const NoiseSchedule s = make_linear_schedule(2, 1e-14, 1e-14);
  const FeatureGrid x = random_grid(kDims, 1);
  const FeatureGrid e = random_grid(kDims, 2);
  EXPECT_LT(max_abs_diff(ddim_step(s, x, 2, 1, e), x), 1e-6);
}

TEST(DdimStep, FinalStepReturnsCleanEstimate) {
  const NoiseSchedule s = default_schedule();
  const FeatureGrid x = random_grid(kDims, 1);
  const FeatureGrid e = random_grid(kDims, 2);
  const FeatureGrid out = ddim_step(s, x, 20, 0, e);
  const double ab = s.alpha_bar(20);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(out[i], (x[i] - std::sqrt(1 - ab) * e[i]) / std::sqrt(ab), 1e-12);
  }
  EXPECT_THROW(ddim_step(s, x, 20, 20, e), std::invalid_argument);
}

TEST(DdpmStep, FinalStepIgnoresNoiseAndZeroNoiseIsMean) {
  const NoiseSchedule s = default_schedule();
  const FeatureGrid x = random_grid(kDims, 1);
  const FeatureGrid e = random_grid(kDims, 2);
  const FeatureGrid z = random_grid(kDims, 3);
  EXPECT_EQ(ddpm_step(s, x, 1, 0, e, z), ddpm_step(s, x, 1, 0, e, FeatureGrid(kDims)));
  const ReverseCoeffs rc = reverse_coeffs(s, 30, 20);
  const FeatureGrid mean = ddpm_step(s, x, 30, 20, e, FeatureGrid(kDims));
  const FeatureGrid noisy = ddpm_step(s, x, 30, 20, e, z);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(mean[i], rc.mean_x_coef * x[i] + rc.mean_eps_coef * e[i], 1e-12);
    EXPECT_NEAR(noisy[i] - mean[i], rc.sigma * z[i], 1e-12);
  }
}

TEST(Generate, SingleStepPlanIsCleanEstimate) {
  const NoiseSchedule s = default_schedule();
  const AnalyticDenoiser d(half_split_model(kDims), s);
  const FeatureGrid x = random_grid(kDims, 9);
  const StepPlan plan = StepPlan::uniform(1000, 1);
  const GuidanceConfig g{1.0, Condition::label(0)};
  EXPECT_EQ(generate(d, s, plan, x, g, SamplerKind::ddim), ddim_step(s, x, 1000, 0, d.predict_eps(x, g.c_rev, 1000)));
}

TEST(Generate, CoarseDdimMatchesFineReference) {
  // Single-Gaussian label, x_T = 0: the 10x finer plan serves as the flow reference.
  const NoiseSchedule s = default_schedule();
  const AnalyticDenoiser d(half_split_model(kDims), s);
  const GuidanceConfig g{1.0, Condition::label(0)};
  const FeatureGrid zero(kDims);
  const FeatureGrid coarse = generate(d, s, StepPlan::uniform(1000, 100), zero, g, SamplerKind::ddim);
  const FeatureGrid fine = generate(d, s, StepPlan::uniform(1000, 1000), zero, g, SamplerKind::ddim);
  EXPECT_LT(max_abs_diff(coarse, fine), 1e-3);
}

TEST(Generate, RefiningThePlanShrinksTheChange) {
  const NoiseSchedule s = default_schedule();
  const AnalyticDenoiser d(half_split_model(kDims), s);
  const GuidanceConfig g{1.0, Condition::label(1)};
  std::vector<double> d1, d2;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FeatureGrid x = random_grid(kDims, seed);
    const FeatureGrid a = generate(d, s, StepPlan::uniform(1000, 10), x, g, SamplerKind::ddim);
    const FeatureGrid b = generate(d, s, StepPlan::uniform(1000, 50), x, g, SamplerKind::ddim);
    const FeatureGrid c = generate(d, s, StepPlan::uniform(1000, 200), x, g, SamplerKind::ddim);
    d1.push_back(std::sqrt(squared_norm(a - b)));
    d2.push_back(std::sqrt(squared_norm(b - c)));
  }
  EXPECT_LE(median(d2), median(d1));
}

TEST(Generate, DeterministicAndValidatesNoiseCount) {
  const NoiseSchedule s = default_schedule();
  const AnalyticDenoiser d(half_split_model(kDims), s);
  const FeatureGrid x = random_grid(kDims, 4);
  const StepPlan plan = StepPlan::uniform(1000, 20);
  const GuidanceConfig g{1.0, Condition::label(0)};
  EXPECT_EQ(generate(d, s, plan, x, g, SamplerKind::ddim), generate(d, s, plan, x, g, SamplerKind::ddim));
  EXPECT_EQ(generate(d, s, plan, x, g, SamplerKind::ddpm, {}, 3), generate(d, s, plan, x, g, SamplerKind::ddpm, {}, 3));
  EXPECT_NE(generate(d, s, plan, x, g, SamplerKind::ddpm, {}, 3), generate(d, s, plan, x, g, SamplerKind::ddpm, {}, 4));
  std::vector<FeatureGrid> zs(5, FeatureGrid(kDims));
  EXPECT_THROW(generate(d, s, plan, x, g, SamplerKind::ddpm, zs), std::invalid_argument);
}

TEST(SamplerKind, ParseRoundTrip) {
  EXPECT_EQ(parse_sampler_kind("ddim"), SamplerKind::ddim);
  EXPECT_EQ(to_string(SamplerKind::ddpm), "ddpm");
  EXPECT_THROW(parse_sampler_kind("euler"), std::invalid_argument);
}
