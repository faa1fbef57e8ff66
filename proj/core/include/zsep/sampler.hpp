#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "zsep/denoiser.hpp"
#include "zsep/schedule.hpp"

namespace zsep {

enum class SamplerKind { ddim, ddpm };

std::string to_string(SamplerKind kind);
SamplerKind parse_sampler_kind(const std::string& s);

struct GuidanceConfig {
  double omega = 1.0;
  Condition c_rev;
};

/// eps_null + omega * (eps_cond - eps_null). omega == 0 evaluates only the
/// null branch and omega == 1 only the conditional one, so those two cases
/// return the raw model prediction bit for bit.
FeatureGrid cfg_eps(const Denoiser& model, const FeatureGrid& x_t, int t, const GuidanceConfig& g);

/// Deterministic step through the clean-data estimate:
///   x0 = (x_t - sqrt(1 - ab_t) eps) / sqrt(ab_t)
///   x_prev = sqrt(ab_prev) x0 + sqrt(1 - ab_prev) eps
FeatureGrid ddim_step(const NoiseSchedule& sched, const FeatureGrid& x_t, int t, int t_prev, const FeatureGrid& eps);

/// mu(x_t, eps) + sigma z with posterior variance. z is ignored when sigma is 0.
FeatureGrid ddpm_step(const NoiseSchedule& sched, const FeatureGrid& x_t, int t, int t_prev, const FeatureGrid& eps,
                      const FeatureGrid& z);

/// Runs the guided reverse process over `plan` starting from x_T.
///
/// For DDPM, `zs` holds one grid per plan step. When it is empty the noise of
/// step k is drawn from derive_seed(seed, k). A supplied z at a step whose
/// sigma is 0 is added as a plain residual (x_prev = mu + z); this is how an
/// inversion trace carries the last step, and it is zero for fresh draws.
FeatureGrid generate(const Denoiser& model, const NoiseSchedule& sched, const StepPlan& plan, const FeatureGrid& x_T,
                     const GuidanceConfig& g, SamplerKind kind, std::span<const FeatureGrid> zs = {},
                     std::uint64_t seed = 0);

}  // namespace zsep
