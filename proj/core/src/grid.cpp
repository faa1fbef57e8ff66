#include "zsep/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace zsep {

std::string GridDims::to_string() const {
  return std::to_string(channels) + "x" + std::to_string(frames) + "x" + std::to_string(bins);
}

FeatureGrid::FeatureGrid(GridDims dims, double fill) : dims_(dims), values_(dims.size(), fill) {
  if (!dims.valid()) {
    throw std::invalid_argument("FeatureGrid: dimensions must be positive, got " + dims.to_string());
  }
}

FeatureGrid::FeatureGrid(GridDims dims, std::vector<double> values)
    : dims_(dims), values_(std::move(values)) {
  if (!dims.valid()) {
    throw std::invalid_argument("FeatureGrid: dimensions must be positive, got " + dims.to_string());
  }
  if (values_.size() != dims.size()) {
    throw std::invalid_argument("FeatureGrid: " + std::to_string(values_.size()) +
                                " values for dims " + dims.to_string());
  }
  if (!all_finite()) {
    throw std::invalid_argument("FeatureGrid: non-finite value");
  }
}

bool FeatureGrid::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_dims(const FeatureGrid& a, const FeatureGrid& b, const char* what) {
  if (a.dims() != b.dims()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch " + a.dims().to_string() +
                                " vs " + b.dims().to_string());
  }
}

FeatureGrid& FeatureGrid::operator+=(const FeatureGrid& other) {
  require_same_dims(*this, other, "FeatureGrid::operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

FeatureGrid& FeatureGrid::operator-=(const FeatureGrid& other) {
  require_same_dims(*this, other, "FeatureGrid::operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

FeatureGrid& FeatureGrid::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

FeatureGrid operator+(FeatureGrid a, const FeatureGrid& b) { return a += b; }
FeatureGrid operator-(FeatureGrid a, const FeatureGrid& b) { return a -= b; }
FeatureGrid operator*(double s, FeatureGrid g) { return g *= s; }

FeatureGrid axpby(double a, const FeatureGrid& x, double b, const FeatureGrid& y) {
  require_same_dims(x, y, "axpby");
  FeatureGrid out(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
  return out;
}

double dot(const FeatureGrid& a, const FeatureGrid& b) {
  require_same_dims(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(const FeatureGrid& g) {
  double s = 0.0;
  for (double v : g.values()) s += v * v;
  return s;
}

double max_abs_diff(const FeatureGrid& a, const FeatureGrid& b) {
  require_same_dims(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace zsep
