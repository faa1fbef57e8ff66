#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zsep/condition.hpp"
#include "zsep/grid.hpp"

namespace zsep {

/// Harmonic-texture template for one source class.
struct SourceLabel {
  int id = 0;
  std::string name;
  int fundamental_bin = 4;
  int harmonics = 3;
  /// Amplitude ratio between consecutive harmonics.
  double decay = 0.7;
  /// Period of the raised-cosine temporal envelope, in frames.
  double envelope_period = 8.0;
  double amplitude = 1.0;

  friend bool operator==(const SourceLabel&, const SourceLabel&) = default;
};

class LabelRegistry {
 public:
  LabelRegistry() = default;
  explicit LabelRegistry(std::vector<SourceLabel> labels);

  /// Throws on duplicate id or invalid template parameters.
  void add(SourceLabel label);
  const SourceLabel& get(int id) const;
  bool contains(int id) const;
  const std::vector<SourceLabel>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }

  /// Four textures with fundamentals 3, 4, 5, 7.
  static LabelRegistry default_registry();

 private:
  std::vector<SourceLabel> labels_;
};

/// Relative scale of the half-normal jitter added to every cell.
inline constexpr double kJitterScale = 0.02;
/// Per-source gain is drawn uniformly from [kGainLow, kGainHigh].
inline constexpr double kGainLow = 0.8;
inline constexpr double kGainHigh = 1.2;

/// value(c, t, f) = amplitude * gain * env(t) * sum_h decay^(h-1) [f == h * f0]
///                  + amplitude * kJitterScale * |n|,   n ~ N(0, 1)
/// with env(t) = (1 + cos(2 pi t / period + phase)) / 2 and (gain, phase, n)
/// drawn from `seed`. Harmonics at or beyond F are dropped and reported in
/// `warnings` when given. Throws if the fundamental bin is not below F.
FeatureGrid gen_source(const SourceLabel& label, GridDims dims, std::uint64_t seed,
                       std::vector<std::string>* warnings = nullptr);

/// Closed-form expectation of the total energy of gen_source over seeds.
double expected_source_energy(const SourceLabel& label, GridDims dims);

/// Element-wise sum in list order. Throws on empty input or dims mismatch.
FeatureGrid mix(const std::vector<FeatureGrid>& sources);

struct LabeledGrid {
  Condition condition;
  FeatureGrid grid;
};

/// n_per_label singleton samples per label and, with include_pairs, n_per_label
/// two-source mixtures for every unordered label pair (labelled Composite).
std::vector<LabeledGrid> make_dataset(const std::vector<SourceLabel>& labels, int n_per_label,
                                      bool include_pairs, GridDims dims, std::uint64_t seed);

struct SceneSource {
  SourceLabel label;
  FeatureGrid grid;
};

struct SyntheticScene {
  std::uint64_t id = 0;
  std::uint64_t seed = 0;
  std::vector<SceneSource> sources;
  FeatureGrid mixture;
  std::vector<std::string> warnings;

  /// Sum of the sources carrying the given label ids.
  FeatureGrid source_sum(const std::vector<int>& label_ids) const;
};

/// Scene with the given labels; source k is generated from derive_seed(seed, k)
/// and scaled by gains[k] (unit gains when empty).
SyntheticScene make_scene(const LabelRegistry& registry, const std::vector<int>& label_ids, GridDims dims,
                          std::uint64_t seed, const std::vector<double>& gains = {});

/// `count` two-source scenes with distinct labels drawn uniformly from the
/// registry. Scene k depends only on derive_seed(seed, k).
std::vector<SyntheticScene> make_two_source_scenes(const LabelRegistry& registry, int count, GridDims dims,
                                                   std::uint64_t seed);

}  // namespace zsep
