#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "zsep/inversion.hpp"
#include "zsep/scene.hpp"

namespace zsep {

struct SeparationRequest {
  FeatureGrid mixture;
  Condition c_inv;
  std::vector<Condition> targets;
  double omega = 1.0;
  SamplerKind kind = SamplerKind::ddpm;
  StepPlan plan;
  std::uint64_t seed = 0;
  /// DDIM only: fixed-point refinement passes per inversion step.
  int inversion_refine = 0;
  /// Ablation switches: invert again for every target (seed derive_seed(seed, k + 1)),
  /// or draw fresh DDPM noise instead of replaying the trace's zs.
  bool reinvert_per_target = false;
  bool resample_noise = false;
};

struct TargetDiagnostics {
  Condition target;
  std::optional<double> si_sdr_db;
  std::optional<double> spectral_l1;
  double runtime_ms = 0.0;
};

struct SeparationResult {
  std::vector<FeatureGrid> outputs;
  std::uint64_t trace_id = 0;
  std::vector<TargetDiagnostics> diagnostics;
};

/// Ground truth for a target: the sum of the scene's sources carrying its
/// labels, or the mixture for the null condition.
FeatureGrid target_truth(const SyntheticScene& scene, const Condition& target);

/// Inverts the mixture once under c_inv and denoises it once per target with
/// (omega, target). Truth only feeds the diagnostics.
SeparationResult separate(const Denoiser& model, const NoiseSchedule& sched, const SeparationRequest& req,
                          const SyntheticScene* truth = nullptr);

/// Settings shared by the scene-level experiments.
struct ExperimentSettings {
  SamplerKind kind = SamplerKind::ddpm;
  StepPlan plan;
  Condition c_inv;
  std::uint64_t seed = 0;
  int inversion_refine = 0;
};

struct MetricRow {
  std::uint64_t scene_id = 0;
  std::uint64_t seed = 0;
  std::string target_label;
  double omega = 0.0;
  SamplerKind sampler = SamplerKind::ddpm;
  int steps = 0;
  double si_sdr_db = 0.0;
  double spectral_l1 = 0.0;
  double desk_fad = 0.0;
  /// Not part of the CSV: SI-SDR of the output against the mixture.
  double si_sdr_vs_mixture_db = 0.0;
};

struct OmegaSummary {
  double omega = 0.0;
  double mean_si_sdr_db = 0.0;
  double median_si_sdr_db = 0.0;
  double mean_spectral_l1 = 0.0;
  double desk_fad = 0.0;
};

struct SweepTable {
  std::vector<MetricRow> rows;
  std::vector<OmegaSummary> summary;
};

inline const std::vector<double> kDefaultOmegas{0.0, 0.5, 1.0, 1.5, 2.0};

/// Every scene is inverted once; each of its source labels is then extracted
/// at every omega. Rows are ordered by (scene, omega, target). desk-FAD per
/// omega compares the outputs with the true sources. `jobs` > 1 spreads
/// scenes over threads without changing the result.
SweepTable sweep_omega(const Denoiser& model, const NoiseSchedule& sched, const std::vector<SyntheticScene>& scenes,
                       const std::vector<double>& omegas, const ExperimentSettings& settings, int jobs = 1);

struct AblationRow {
  std::uint64_t scene_id = 0;
  std::uint64_t seed = 0;
  std::string config;
  std::string c_inv;
  std::string c_rev;
  double si_sdr_db = 0.0;
  double spectral_l1 = 0.0;
  double delta_si_sdr_db = 0.0;
  double delta_spectral_l1 = 0.0;
};

struct AblationSummary {
  std::string config;
  double median_si_sdr_db = 0.0;
  double median_delta_si_sdr_db = 0.0;
  double mean_spectral_l1 = 0.0;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  std::vector<AblationSummary> summary;
};

inline constexpr const char* kAblationBaseline = "null_inv_target_rev";
inline constexpr const char* kAblationRandom = "null_inv_random_rev";
inline constexpr const char* kAblationOtherInv = "other_inv_target_rev";

/// Three rows per two-source scene, separating its first source i:
/// (null, c_i), (null, random), (c_j, c_i). Deltas are against the first.
/// The random prompt of a scene is Condition::random(derive_seed(scene seed, 0x5EED)).
AblationTable ablate_prompts(const Denoiser& model, const NoiseSchedule& sched,
                             const std::vector<SyntheticScene>& scenes, const ExperimentSettings& settings,
                             int jobs = 1);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Exceptions are rethrown
/// (the one from the lowest index wins).
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace zsep
