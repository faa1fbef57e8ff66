#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "zsep/sampler.hpp"
#include "zsep/scene.hpp"
#include "zsep/schedule.hpp"
#include "zsep/tiny_denoiser.hpp"

namespace zsep {

struct DatasetSpec {
  GridDims dims{1, 16, 32};
  int n_per_label = 64;
  bool include_pairs = true;
  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

enum class DenoiserKind { analytic, tiny };

struct DenoiserSpec {
  DenoiserKind kind = DenoiserKind::tiny;
  TinyDenoiserSpec tiny;
  int epochs = 100;
  double learning_rate = 2e-3;
  int batch_size = 64;
  /// Floor on fitted per-cell standard deviations of the analytic model.
  double min_std = 0.05;
};

struct ExperimentConfig {
  ScheduleSpec schedule;
  std::vector<SourceLabel> labels = LabelRegistry::default_registry().labels();
  DatasetSpec dataset;
  DenoiserSpec denoiser;
  SamplerKind sampler = SamplerKind::ddpm;
  int steps = 50;
  double omega = 1.0;
  Condition c_inv;
  std::vector<double> omegas = kDefaultOmegaList();
  int scenes = 50;
  std::uint64_t seed = 0;
  /// Model checkpoint to load instead of training/fitting; empty means none.
  std::string checkpoint;
  std::string output = "zsep_out";
  std::vector<int> widths{16, 64, 256};
  int seeds = 5;
  std::vector<int> roundtrip_steps{10, 50, 200};
  int inversion_refine = 0;
  int jobs = 1;
  /// separate: condition strings; empty means the scene's own labels.
  std::vector<std::string> targets;
  /// separate: grid checkpoint holding a "mixture" record; empty means a generated scene.
  std::string mixture;
  /// sweep-omega: fail when the median SI-SDR does not peak at omega = 1.
  bool assert_peak = false;

  static std::vector<double> kDefaultOmegaList() { return {0.0, 0.5, 1.0, 1.5, 2.0}; }
};

/// Strict: unknown keys, wrong types and out-of-range values throw ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Pretty-printed JSON with every field; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& cfg);
/// Re-runs the validation performed by parse_config.
void validate_config(const ExperimentConfig& cfg);

LabelRegistry registry_of(const ExperimentConfig& cfg);

}  // namespace zsep
