#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace zsep {

struct GridDims {
  std::size_t channels = 1;
  std::size_t frames = 1;
  std::size_t bins = 1;

  std::size_t size() const { return channels * frames * bins; }
  bool valid() const { return channels > 0 && frames > 0 && bins > 0; }
  std::string to_string() const;

  friend bool operator==(const GridDims&, const GridDims&) = default;
};

/// Dense C x T x F latent, stored channel-major then frame then bin.
/// Dimensions are fixed at construction.
class FeatureGrid {
 public:
  FeatureGrid() = default;
  explicit FeatureGrid(GridDims dims, double fill = 0.0);
  /// Throws std::invalid_argument on size mismatch or non-finite values.
  FeatureGrid(GridDims dims, std::vector<double> values);

  const GridDims& dims() const { return dims_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::size_t index(std::size_t c, std::size_t t, std::size_t f) const {
    return (c * dims_.frames + t) * dims_.bins + f;
  }
  double& at(std::size_t c, std::size_t t, std::size_t f) { return values_[index(c, t, f)]; }
  double at(std::size_t c, std::size_t t, std::size_t f) const { return values_[index(c, t, f)]; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  bool all_finite() const;

  FeatureGrid& operator+=(const FeatureGrid& other);
  FeatureGrid& operator-=(const FeatureGrid& other);
  FeatureGrid& operator*=(double s);

  friend bool operator==(const FeatureGrid&, const FeatureGrid&) = default;

 private:
  GridDims dims_{0, 0, 0};
  std::vector<double> values_;
};

FeatureGrid operator+(FeatureGrid a, const FeatureGrid& b);
FeatureGrid operator-(FeatureGrid a, const FeatureGrid& b);
FeatureGrid operator*(double s, FeatureGrid g);

/// a*x + b*y, element-wise.
FeatureGrid axpby(double a, const FeatureGrid& x, double b, const FeatureGrid& y);

double dot(const FeatureGrid& a, const FeatureGrid& b);
double squared_norm(const FeatureGrid& g);
double max_abs_diff(const FeatureGrid& a, const FeatureGrid& b);

/// Throws std::invalid_argument naming `what` if the dims differ.
void require_same_dims(const FeatureGrid& a, const FeatureGrid& b, const char* what);

}  // namespace zsep
