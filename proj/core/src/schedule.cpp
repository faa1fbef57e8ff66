#include "zsep/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace zsep {

std::string to_string(ScheduleKind kind) { return kind == ScheduleKind::linear ? "linear" : "cosine"; }

ScheduleKind parse_schedule_kind(const std::string& s) {
  if (s == "linear") return ScheduleKind::linear;
  if (s == "cosine") return ScheduleKind::cosine;
  throw std::invalid_argument("unknown schedule kind '" + s + "'");
}

NoiseSchedule::NoiseSchedule(ScheduleSpec spec, std::vector<double> betas)
    : spec_(spec), betas_(std::move(betas)) {
  alpha_bars_.resize(betas_.size() + 1);
  alpha_bars_[0] = 1.0;
  for (std::size_t t = 1; t <= betas_.size(); ++t) {
    const double b = betas_[t - 1];
    if (!(b > 0.0 && b < 1.0)) {
      throw std::invalid_argument("NoiseSchedule: beta_" + std::to_string(t) + " outside (0, 1)");
    }
    alpha_bars_[t] = alpha_bars_[t - 1] * (1.0 - b);
  }
}

double NoiseSchedule::beta(int t) const {
  if (t < 1 || t > steps()) throw std::out_of_range("NoiseSchedule::beta: t=" + std::to_string(t));
  return betas_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > steps()) throw std::out_of_range("NoiseSchedule::alpha_bar: t=" + std::to_string(t));
  return alpha_bars_[static_cast<std::size_t>(t)];
}

NoiseSchedule make_linear_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw std::invalid_argument("make_linear_schedule: T must be >= 1");
  if (!std::isfinite(beta_start) || !std::isfinite(beta_end) || !(beta_start > 0.0) ||
      !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw std::invalid_argument("make_linear_schedule: need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int t = 1; t <= steps; ++t) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / (steps - 1);
    betas[static_cast<std::size_t>(t - 1)] = beta_start + (beta_end - beta_start) * frac;
  }
  ScheduleSpec spec{ScheduleKind::linear, steps, beta_start, beta_end, 0.008};
  return NoiseSchedule(spec, std::move(betas));
}

NoiseSchedule make_cosine_schedule(int steps, double offset) {
  if (steps < 1) throw std::invalid_argument("make_cosine_schedule: T must be >= 1");
  if (!std::isfinite(offset) || !(offset > 0.0)) {
    throw std::invalid_argument("make_cosine_schedule: offset must be positive");
  }
  auto f = [&](int u) {
    const double c = std::cos(((static_cast<double>(u) / steps + offset) / (1.0 + offset)) *
                              std::numbers::pi / 2.0);
    return c * c;
  };
  const double f0 = f(0);
  std::vector<double> betas(static_cast<std::size_t>(steps));
  double prev = 1.0;
  for (int t = 1; t <= steps; ++t) {
    const double cur = f(t) / f0;
    betas[static_cast<std::size_t>(t - 1)] = std::clamp(1.0 - cur / prev, 1e-12, 0.999);
    prev = cur;
  }
  ScheduleSpec spec{ScheduleKind::cosine, steps, 0.0, 0.0, offset};
  return NoiseSchedule(spec, std::move(betas));
}

NoiseSchedule make_schedule(const ScheduleSpec& spec) {
  return spec.kind == ScheduleKind::linear ? make_linear_schedule(spec.steps, spec.beta_start, spec.beta_end)
                                           : make_cosine_schedule(spec.steps, spec.offset);
}

NoiseSchedule default_schedule() { return make_linear_schedule(1000, 1e-4, 0.02); }

ReverseCoeffs reverse_coeffs(const NoiseSchedule& sched, int t, int t_prev, VarianceKind variance) {
  if (t_prev >= t) throw std::invalid_argument("reverse_coeffs: t_prev must be < t");
  if (t_prev < 0 || t > sched.steps()) throw std::out_of_range("reverse_coeffs: index outside schedule");
  const double ab_t = sched.alpha_bar(t);
  const double ab_prev = sched.alpha_bar(t_prev);
  const double step_alpha = ab_t / ab_prev;
  const double step_beta = 1.0 - step_alpha;
  const double sqrt_step_alpha = std::sqrt(step_alpha);

  ReverseCoeffs rc{};
  rc.mean_x_coef = 1.0 / sqrt_step_alpha;
  rc.mean_eps_coef = -step_beta / (std::sqrt(1.0 - ab_t) * sqrt_step_alpha);
  const double var = variance == VarianceKind::posterior ? (1.0 - ab_prev) / (1.0 - ab_t) * step_beta
                                                         : step_beta;
  rc.sigma = std::sqrt(std::max(var, 0.0));
  return rc;
}

StepPlan StepPlan::uniform(int schedule_steps, int count) {
  if (schedule_steps < 1) throw std::invalid_argument("StepPlan::uniform: T must be >= 1");
  if (count < 1 || count > schedule_steps) {
    throw std::invalid_argument("StepPlan::uniform: step count must lie in [1, T]");
  }
  std::vector<int> ts;
  ts.reserve(static_cast<std::size_t>(count));
  if (count == 1) {
    ts.push_back(schedule_steps);
  } else {
    for (int k = 0; k < count; ++k) {
      const double pos = static_cast<double>(schedule_steps) -
                         static_cast<double>(k) * (schedule_steps - 1) / (count - 1);
      ts.push_back(static_cast<int>(std::lround(pos)));
    }
  }
  return from_list(std::move(ts), schedule_steps);
}

StepPlan StepPlan::from_list(std::vector<int> timesteps, int schedule_steps) {
  if (timesteps.empty()) throw std::invalid_argument("StepPlan: empty timestep list");
  for (std::size_t k = 0; k < timesteps.size(); ++k) {
    if (timesteps[k] < 1 || timesteps[k] > schedule_steps) {
      throw std::invalid_argument("StepPlan: timestep " + std::to_string(timesteps[k]) + " outside [1, T]");
    }
    if (k > 0 && timesteps[k] >= timesteps[k - 1]) {
      throw std::invalid_argument("StepPlan: timesteps must be strictly decreasing");
    }
  }
  return StepPlan(std::move(timesteps));
}

}  // namespace zsep
