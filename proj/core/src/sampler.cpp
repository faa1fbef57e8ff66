#include "zsep/sampler.hpp"

#include <cmath>
#include <stdexcept>

#include "zsep/random.hpp"

namespace zsep {

std::string to_string(SamplerKind kind) { return kind == SamplerKind::ddim ? "ddim" : "ddpm"; }

SamplerKind parse_sampler_kind(const std::string& s) {
  if (s == "ddim") return SamplerKind::ddim;
  if (s == "ddpm") return SamplerKind::ddpm;
  throw std::invalid_argument("unknown sampler '" + s + "' (expected ddim or ddpm)");
}

FeatureGrid cfg_eps(const Denoiser& model, const FeatureGrid& x_t, int t, const GuidanceConfig& g) {
  if (!std::isfinite(g.omega) || g.omega < 0.0) throw std::invalid_argument("cfg_eps: omega must be finite and >= 0");
  if (g.omega == 0.0) return model.predict_eps(x_t, Condition::null(), t);
  if (g.omega == 1.0) return model.predict_eps(x_t, g.c_rev, t);
  FeatureGrid out = model.predict_eps(x_t, Condition::null(), t);
  const FeatureGrid cond = model.predict_eps(x_t, g.c_rev, t);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += g.omega * (cond[i] - out[i]);
  return out;
}

namespace {

void check_step(const NoiseSchedule& sched, int t, int t_prev) {
  if (t_prev >= t) throw std::invalid_argument("step: t_prev must be below t");
  if (t_prev < 0 || t > sched.steps()) throw std::invalid_argument("step: timestep outside schedule");
}

}  // namespace

FeatureGrid ddim_step(const NoiseSchedule& sched, const FeatureGrid& x_t, int t, int t_prev, const FeatureGrid& eps) {
  check_step(sched, t, t_prev);
  require_same_dims(x_t, eps, "ddim_step eps");
  const double ab = sched.alpha_bar(t);
  const double ab_prev = sched.alpha_bar(t_prev);
  const double sa = std::sqrt(ab);
  const double sn = std::sqrt(1.0 - ab);
  const double sa_prev = std::sqrt(ab_prev);
  const double sn_prev = std::sqrt(1.0 - ab_prev);
  FeatureGrid out(x_t.dims());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x0 = (x_t[i] - sn * eps[i]) / sa;
    out[i] = sa_prev * x0 + sn_prev * eps[i];
  }
  return out;
}

FeatureGrid ddpm_step(const NoiseSchedule& sched, const FeatureGrid& x_t, int t, int t_prev, const FeatureGrid& eps,
                      const FeatureGrid& z) {
  check_step(sched, t, t_prev);
  require_same_dims(x_t, eps, "ddpm_step eps");
  require_same_dims(x_t, z, "ddpm_step z");
  const ReverseCoeffs rc = reverse_coeffs(sched, t, t_prev);
  FeatureGrid out(x_t.dims());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = rc.mean_x_coef * x_t[i] + rc.mean_eps_coef * eps[i];
    if (rc.sigma > 0.0) out[i] += rc.sigma * z[i];
  }
  return out;
}

FeatureGrid generate(const Denoiser& model, const NoiseSchedule& sched, const StepPlan& plan, const FeatureGrid& x_T,
                     const GuidanceConfig& g, SamplerKind kind, std::span<const FeatureGrid> zs, std::uint64_t seed) {
  if (!zs.empty() && zs.size() != plan.size()) {
    throw std::invalid_argument("generate: " + std::to_string(zs.size()) + " noise grids for a " +
                                std::to_string(plan.size()) + "-step plan");
  }
  if (plan.first() > sched.steps()) throw std::invalid_argument("generate: plan exceeds schedule");
  FeatureGrid x = x_T;
  const auto ts = plan.timesteps();
  for (std::size_t k = 0; k < plan.size(); ++k) {
    const int t = ts[k];
    const int t_prev = plan.previous(k);
    const FeatureGrid eps = cfg_eps(model, x, t, g);
    if (kind == SamplerKind::ddim) {
      x = ddim_step(sched, x, t, t_prev, eps);
      continue;
    }
    const ReverseCoeffs rc = reverse_coeffs(sched, t, t_prev);
    if (!zs.empty()) {
      require_same_dims(x, zs[k], "generate z");
      if (rc.sigma > 0.0) {
        x = ddpm_step(sched, x, t, t_prev, eps, zs[k]);
      } else {
        FeatureGrid next = ddpm_step(sched, x, t, t_prev, eps, zs[k]);
        next += zs[k];
        x = std::move(next);
      }
    } else {
      FeatureGrid z(x.dims());
      if (rc.sigma > 0.0) {
        Rng rng(derive_seed(seed, k));
        fill_normal(rng, z);
      }
      x = ddpm_step(sched, x, t, t_prev, eps, z);
    }
  }
  return x;
}

}  // namespace zsep
