#include "zsep/inversion.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "zsep/error.hpp"
#include "zsep/random.hpp"

namespace zsep {

namespace {

struct Fnv1a {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void byte(std::uint8_t b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) byte(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void grid(const FeatureGrid& g) {
    u64(g.dims().channels);
    u64(g.dims().frames);
    u64(g.dims().bins);
    for (double v : g.values()) u64(std::bit_cast<std::uint64_t>(v));
  }
};

void check_input(const NoiseSchedule& sched, const StepPlan& plan, const FeatureGrid& x0) {
  if (!x0.all_finite() || x0.empty()) throw std::invalid_argument("inversion: x0 must be non-empty and finite");
  if (plan.first() > sched.steps()) throw std::invalid_argument("inversion: plan exceeds schedule");
}

}  // namespace

std::uint64_t InversionTrace::id() const {
  Fnv1a f;
  f.byte(kind == SamplerKind::ddim ? 1 : 2);
  for (char ch : c_inv.to_string()) f.byte(static_cast<std::uint8_t>(ch));
  for (int t : plan.timesteps()) f.u64(static_cast<std::uint64_t>(t));
  f.grid(x_T);
  for (const auto& z : zs) f.grid(z);
  return f.h;
}

InversionTrace ddim_invert(const Denoiser& model, const NoiseSchedule& sched, const StepPlan& plan,
                           const FeatureGrid& x0, const Condition& c_inv, int refine_iterations) {
  check_input(sched, plan, x0);
  if (refine_iterations < 0) throw std::invalid_argument("ddim_invert: refine_iterations must be >= 0");
  FeatureGrid x = x0;
  const auto ts = plan.timesteps();
  for (std::size_t k = plan.size(); k-- > 0;) {
    const int t = ts[k];
    const int t_prev = plan.previous(k);
    const double sa_prev = std::sqrt(sched.alpha_bar(t_prev));
    const double sn_prev = std::sqrt(1.0 - sched.alpha_bar(t_prev));
    const double sa = std::sqrt(sched.alpha_bar(t));
    const double sn = std::sqrt(1.0 - sched.alpha_bar(t));
    auto ascend = [&](const FeatureGrid& eps) {
      FeatureGrid next(x.dims());
      for (std::size_t i = 0; i < next.size(); ++i) {
        const double x0_hat = (x[i] - sn_prev * eps[i]) / sa_prev;
        next[i] = sa * x0_hat + sn * eps[i];
      }
      return next;
    };
    FeatureGrid next = ascend(model.predict_eps(x, c_inv, t));
    for (int r = 0; r < refine_iterations; ++r) next = ascend(model.predict_eps(next, c_inv, t));
    if (!next.all_finite()) throw NumericalError("ddim_invert: non-finite latent at t=" + std::to_string(t));
    x = std::move(next);
  }
  return InversionTrace{SamplerKind::ddim, std::move(x), {}, c_inv, plan, {}};
}

InversionTrace ddpm_invert(const Denoiser& model, const NoiseSchedule& sched, const StepPlan& plan,
                           const FeatureGrid& x0, const Condition& c_inv, std::uint64_t seed, bool keep_aux) {
  check_input(sched, plan, x0);
  const auto ts = plan.timesteps();

  // Independent noisy latents, keyed by timestep so they do not depend on plan length.
  std::vector<FeatureGrid> aux;
  aux.reserve(plan.size());
  for (int t : ts) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    FeatureGrid n(x0.dims());
    fill_normal(rng, n);
    aux.push_back(axpby(std::sqrt(sched.alpha_bar(t)), x0, std::sqrt(1.0 - sched.alpha_bar(t)), n));
  }

  std::vector<FeatureGrid> zs;
  zs.reserve(plan.size());
  for (std::size_t k = 0; k < plan.size(); ++k) {
    const int t = ts[k];
    const int t_prev = plan.previous(k);
    const FeatureGrid& x_t = aux[k];
    const FeatureGrid& x_prev = k + 1 < plan.size() ? aux[k + 1] : x0;
    const ReverseCoeffs rc = reverse_coeffs(sched, t, t_prev);
    const FeatureGrid eps = model.predict_eps(x_t, c_inv, t);
    if (rc.sigma == 0.0 && t_prev != 0) {
      throw NumericalError("ddpm_invert: zero reverse variance at non-final step t=" + std::to_string(t));
    }
    const double inv_sigma = rc.sigma > 0.0 ? 1.0 / rc.sigma : 1.0;
    FeatureGrid z(x0.dims());
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double mu = rc.mean_x_coef * x_t[i] + rc.mean_eps_coef * eps[i];
      z[i] = (x_prev[i] - mu) * inv_sigma;
    }
    if (!z.all_finite()) throw NumericalError("ddpm_invert: non-finite noise at t=" + std::to_string(t));
    zs.push_back(std::move(z));
  }

  FeatureGrid x_T = aux.front();
  if (!keep_aux) aux.clear();
  return InversionTrace{SamplerKind::ddpm, std::move(x_T), std::move(zs), c_inv, plan, std::move(aux)};
}

FeatureGrid reconstruct(const Denoiser& model, const NoiseSchedule& sched, const InversionTrace& trace,
                        const GuidanceConfig& g, const StepPlan& plan) {
  if (!(plan == trace.plan)) throw std::invalid_argument("reconstruct: plan does not match the inversion trace");
  return reconstruct(model, sched, trace, g);
}

FeatureGrid reconstruct(const Denoiser& model, const NoiseSchedule& sched, const InversionTrace& trace,
                        const GuidanceConfig& g) {
  if (trace.kind == SamplerKind::ddpm && trace.zs.size() != trace.plan.size()) {
    throw std::invalid_argument("reconstruct: DDPM trace is incomplete");
  }
  return generate(model, sched, trace.plan, trace.x_T, g, trace.kind, trace.zs);
}

}  // namespace zsep
