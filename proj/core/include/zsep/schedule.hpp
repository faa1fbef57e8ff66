#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace zsep {

enum class ScheduleKind { linear, cosine };

std::string to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(const std::string& s);

/// The serialisable description of a schedule: {kind, T, beta_start, beta_end | offset}.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::linear;
  int steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  double offset = 0.008;

  friend bool operator==(const ScheduleSpec&, const ScheduleSpec&) = default;
};

/// Discrete diffusion schedule. alpha_bar(0) == 1 is stored explicitly so that
/// step t = 1 needs no special case. Immutable after construction.
class NoiseSchedule {
 public:
  int steps() const { return static_cast<int>(betas_.size()); }
  ScheduleKind kind() const { return spec_.kind; }
  const ScheduleSpec& spec() const { return spec_; }

  /// t in [1, T].
  double beta(int t) const;
  double alpha(int t) const { return 1.0 - beta(t); }
  /// t in [0, T].
  double alpha_bar(int t) const;

  std::span<const double> betas() const { return betas_; }
  /// T + 1 entries, index 0 is the clean-data sentinel.
  std::span<const double> alpha_bars() const { return alpha_bars_; }

  friend NoiseSchedule make_linear_schedule(int steps, double beta_start, double beta_end);
  friend NoiseSchedule make_cosine_schedule(int steps, double offset);

 private:
  NoiseSchedule(ScheduleSpec spec, std::vector<double> betas);

  ScheduleSpec spec_;
  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
};

/// Betas interpolated linearly from beta_start (t = 1) to beta_end (t = T).
NoiseSchedule make_linear_schedule(int steps, double beta_start, double beta_end);

/// alpha_bar(t) = f(t)/f(0), f(u) = cos^2(((u/T + offset)/(1 + offset)) * pi/2), with
/// betas back-derived, clipped to 0.999, and alpha_bar recomputed from the clipped betas.
NoiseSchedule make_cosine_schedule(int steps, double offset = 0.008);

NoiseSchedule make_schedule(const ScheduleSpec& spec);

/// Default DDPM ladder: linear, T = 1000, betas 1e-4 .. 0.02.
NoiseSchedule default_schedule();

/// Variance of the reverse step. `posterior` is the beta-tilde choice and is
/// exactly zero on the step that lands on t = 0; `large` uses the plain
/// (strided) beta and never vanishes.
enum class VarianceKind { posterior, large };

struct ReverseCoeffs {
  double mean_x_coef;
  double mean_eps_coef;
  double sigma;
};

/// Coefficients of mu(x_t) = mean_x_coef * x_t + mean_eps_coef * eps and of
/// the noise scale sigma, for the (possibly strided) step t -> t_prev.
ReverseCoeffs reverse_coeffs(const NoiseSchedule& sched, int t, int t_prev,
                             VarianceKind variance = VarianceKind::posterior);

/// Strictly decreasing timesteps in [1, T]. Step k moves from timesteps()[k]
/// to previous(k), and the last step lands on 0 (clean data).
class StepPlan {
 public:
  /// The single step 1 -> 0.
  StepPlan() : timesteps_{1} {}
  /// `count` timesteps spread evenly over [1, T], always including T and 1.
  static StepPlan uniform(int schedule_steps, int count);
  static StepPlan from_list(std::vector<int> timesteps, int schedule_steps);

  std::span<const int> timesteps() const { return timesteps_; }
  std::size_t size() const { return timesteps_.size(); }
  int first() const { return timesteps_.front(); }
  int previous(std::size_t k) const { return k + 1 < timesteps_.size() ? timesteps_[k + 1] : 0; }

  friend bool operator==(const StepPlan&, const StepPlan&) = default;

 private:
  explicit StepPlan(std::vector<int> ts) : timesteps_(std::move(ts)) {}
  std::vector<int> timesteps_;
};

}  // namespace zsep
