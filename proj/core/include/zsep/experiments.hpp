#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "zsep/analytic_denoiser.hpp"
#include "zsep/checkpoint.hpp"
#include "zsep/config.hpp"
#include "zsep/metrics.hpp"
#include "zsep/report_io.hpp"
#include "zsep/separation.hpp"
#include "zsep/tiny_denoiser.hpp"

namespace zsep {

/// Seed streams hanging off ExperimentConfig::seed.
namespace stream {
inline constexpr std::uint64_t kTrainData = 1;
inline constexpr std::uint64_t kScenes = 2;
inline constexpr std::uint64_t kInit = 3;
inline constexpr std::uint64_t kTrain = 4;
inline constexpr std::uint64_t kEvalData = 5;
inline constexpr std::uint64_t kEvalNoise = 6;
inline constexpr std::uint64_t kSeparation = 7;
inline constexpr std::uint64_t kCapacity = 8;
}  // namespace stream

struct LoadedModel {
  NoiseSchedule sched;
  std::unique_ptr<Denoiser> model;
  std::optional<TinyDenoiserParams> tiny;
  std::optional<GaussianSourceModel> gaussian;
  std::vector<double> loss_curve;
};

std::vector<LabeledGrid> training_data(const ExperimentConfig& cfg);
std::vector<SyntheticScene> evaluation_scenes(const ExperimentConfig& cfg);
ExperimentSettings settings_of(const ExperimentConfig& cfg);

/// Trains (tiny) or fits (analytic) from the config. Tiny parameters are
/// rounded to float32 so the in-memory model equals its checkpoint.
LoadedModel build_model(const ExperimentConfig& cfg);
/// The checkpoint named in the config when set, otherwise build_model.
LoadedModel load_or_build_model(const ExperimentConfig& cfg);
Checkpoint model_checkpoint(const LoadedModel& m);

struct TrainSummary {
  std::filesystem::path checkpoint;
  std::filesystem::path loss_csv;
  std::vector<double> loss_curve;
};
TrainSummary cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& out);

struct SeparateSummary {
  std::filesystem::path grids;
  std::filesystem::path csv;
  SeparationResult result;
  FeatureGrid mixture;
};
SeparateSummary cmd_separate(const ExperimentConfig& cfg, const std::filesystem::path& out);

struct SweepSummary {
  SweepTable table;
  /// m(1) > m(0.5) > m(0) and m(2) < m(1) on the median SI-SDR, when those
  /// omegas are present.
  bool peak_at_one = false;
};
SweepSummary cmd_sweep_omega(const ExperimentConfig& cfg, const std::filesystem::path& out);
bool omega_peak_holds(const std::vector<OmegaSummary>& summary);

AblationTable cmd_ablate_prompts(const ExperimentConfig& cfg, const std::filesystem::path& out);

struct RoundtripRow {
  std::uint64_t scene_id = 0;
  SamplerKind sampler = SamplerKind::ddim;
  int steps = 0;
  double max_abs_error = 0.0;
  double relative_l2_error = 0.0;
};
struct RoundtripSummary {
  std::vector<RoundtripRow> rows;
  /// Median DDIM relative error per entry of roundtrip_steps.
  std::vector<double> ddim_median_error;
  double ddpm_max_abs_error = 0.0;
};
RoundtripSummary roundtrip_study(const Denoiser& model, const NoiseSchedule& sched,
                                 const std::vector<SyntheticScene>& scenes, const std::vector<int>& steps,
                                 const Condition& c_inv, int refine, std::uint64_t seed, int jobs = 1);
RoundtripSummary cmd_roundtrip(const ExperimentConfig& cfg, const std::filesystem::path& out);

struct CapacityRow {
  int hidden = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  double final_train_loss = 0.0;
  double eval_loss = 0.0;
  double median_si_sdr_db = 0.0;
};
struct CapacitySummary {
  std::vector<CapacityRow> rows;
  /// Spearman correlation between -eval_loss and median SI-SDR.
  double rank_correlation = 0.0;
};
CapacitySummary cmd_capacity_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out);

MetricGapReport cmd_report(const ExperimentConfig& cfg, const std::filesystem::path& out);

}  // namespace zsep
