#pragma once

#include <atomic>
#include <cstdint>

#include "zsep/condition.hpp"
#include "zsep/grid.hpp"

namespace zsep {

/// Noise-prediction contract eps(x_t, c, t). Implementations are immutable
/// during inference and return bit-identical results for identical arguments.
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  /// Throws std::invalid_argument for an unsupported condition, a t outside
  /// the model's schedule, or mismatched dims.
  virtual FeatureGrid predict_eps(const FeatureGrid& x_t, const Condition& c, int t) const = 0;

  virtual bool supports(const Condition& c) const = 0;
  virtual GridDims dims() const = 0;
};

/// Forwards to another denoiser and counts calls by condition kind. Used to
/// prove which guidance branches were evaluated.
class CountingDenoiser final : public Denoiser {
 public:
  explicit CountingDenoiser(const Denoiser& inner) : inner_(inner) {}

  FeatureGrid predict_eps(const FeatureGrid& x_t, const Condition& c, int t) const override {
    (c.is_null() ? null_calls_ : conditional_calls_).fetch_add(1, std::memory_order_relaxed);
    return inner_.predict_eps(x_t, c, t);
  }
  bool supports(const Condition& c) const override { return inner_.supports(c); }
  GridDims dims() const override { return inner_.dims(); }

  std::uint64_t null_calls() const { return null_calls_.load(); }
  std::uint64_t conditional_calls() const { return conditional_calls_.load(); }
  void reset() {
    null_calls_ = 0;
    conditional_calls_ = 0;
  }

 private:
  const Denoiser& inner_;
  mutable std::atomic<std::uint64_t> null_calls_{0};
  mutable std::atomic<std::uint64_t> conditional_calls_{0};
};

}  // namespace zsep
