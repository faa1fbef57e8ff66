#pragma once

#include <cstdint>

namespace zsep {

class FeatureGrid;

/// SplitMix64 output function.
std::uint64_t mix64(std::uint64_t z);

/// Child seed for `index` under `parent`. Children are independent of one
/// another and of the parent's own stream, so experiment -> scene -> step
/// hierarchies stay stable when siblings are added.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

/// Counter-based 64-bit generator. Output n for key k is
/// mix64(k + (n + 1) * 0x9E3779B97F4A7C15), i.e. the SplitMix64 sequence
/// started at k. Gaussian draws use Box-Muller and consume two uniforms per
/// pair of normals, so draw sequences are identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key) {}

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t below(std::uint64_t n);
  double normal();

  Rng split(std::uint64_t index) const { return Rng(derive_seed(key_, index)); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Fills the grid with standard normal draws in storage order.
void fill_normal(Rng& rng, FeatureGrid& grid);

}  // namespace zsep
