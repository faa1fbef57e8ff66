#pragma once

#include <cstdint>
#include <vector>

#include "zsep/sampler.hpp"

namespace zsep {

/// Terminal latent of an inverted grid plus, for DDPM, the per-step noises
/// that replay it. zs[k] belongs to plan step k. Memory is O(steps x grid).
struct InversionTrace {
  SamplerKind kind = SamplerKind::ddim;
  FeatureGrid x_T;
  std::vector<FeatureGrid> zs;
  Condition c_inv;
  StepPlan plan;
  /// DDPM only, when requested: the auxiliary noisy latents, one per plan step.
  std::vector<FeatureGrid> aux_xs;

  /// FNV-1a over kind, condition, plan and the bits of x_T and zs.
  std::uint64_t id() const;
};

/// Ascends the deterministic recursion from x_0 to the plan's first timestep.
/// Each step t_prev -> t evaluates eps at (x_{t_prev}, c_inv, t); with
/// `refine_iterations` > 0 the step is repeated with eps taken at the new
/// iterate, converging to the exact inverse of ddim_step.
InversionTrace ddim_invert(const Denoiser& model, const NoiseSchedule& sched, const StepPlan& plan,
                           const FeatureGrid& x0, const Condition& c_inv, int refine_iterations = 0);

/// Edit-friendly inversion: independent noisy latents
/// x_t = sqrt(ab_t) x0 + sqrt(1 - ab_t) n_t, then z_k = (x_prev - mu(x_t)) / sigma.
/// The last step has sigma 0; its entry holds the residual x0 - mu instead.
InversionTrace ddpm_invert(const Denoiser& model, const NoiseSchedule& sched, const StepPlan& plan,
                           const FeatureGrid& x0, const Condition& c_inv, std::uint64_t seed, bool keep_aux = false);

/// generate() from the trace. Throws if `plan` differs from the trace's plan.
FeatureGrid reconstruct(const Denoiser& model, const NoiseSchedule& sched, const InversionTrace& trace,
                        const GuidanceConfig& g, const StepPlan& plan);
FeatureGrid reconstruct(const Denoiser& model, const NoiseSchedule& sched, const InversionTrace& trace,
                        const GuidanceConfig& g);

}  // namespace zsep
