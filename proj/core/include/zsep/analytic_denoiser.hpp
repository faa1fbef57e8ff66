#pragma once

#include <vector>

#include "zsep/denoiser.hpp"
#include "zsep/scene.hpp"
#include "zsep/schedule.hpp"

namespace zsep {

/// Diagonal Gaussian prior for one label.
struct LabelGaussian {
  int id = 0;
  FeatureGrid mean;
  FeatureGrid stddev;
};

/// One mixture component of the unconditional prior.
struct GaussianComponent {
  Condition condition;
  FeatureGrid mean;
  FeatureGrid variance;
  double prior = 0.0;
};

/// Per-label diagonal Gaussians plus composite components for label sets.
/// A composite's mean and variance are the sums over its labels (independent
/// sources add). Priors cover labels and composites and are normalised to 1.
class GaussianSourceModel {
 public:
  GaussianSourceModel() = default;
  /// `priors` lists labels first, then composites; empty means uniform.
  GaussianSourceModel(std::vector<LabelGaussian> labels, std::vector<std::vector<int>> composites,
                      std::vector<double> priors = {});

  /// Per-label sample mean and standard deviation (floored at min_std) of the
  /// singleton samples, with every unordered label pair as a composite.
  static GaussianSourceModel fit(const std::vector<LabeledGrid>& data, double min_std = 0.05);

  const std::vector<LabelGaussian>& labels() const { return labels_; }
  const std::vector<GaussianComponent>& components() const { return components_; }
  const std::vector<std::vector<int>>& composites() const { return composites_; }
  GridDims dims() const { return dims_; }

  /// nullptr when the condition names no component.
  const GaussianComponent* find(const Condition& c) const;

 private:
  GridDims dims_{0, 0, 0};
  std::vector<LabelGaussian> labels_;
  std::vector<std::vector<int>> composites_;
  std::vector<GaussianComponent> components_;
};

/// Exact eps* for the Gaussian model. For a single component k:
///   m = sqrt(ab) mu_k, v = ab s_k^2 + 1 - ab,
///   E[x0 | x_t] = mu_k + (sqrt(ab) s_k^2 / v) (x_t - m),
///   eps* = (x_t - sqrt(ab) E[x0 | x_t]) / sqrt(1 - ab).
/// The null condition averages the component predictions with posterior
/// responsibilities computed by log-sum-exp. Requires t >= 1.
FeatureGrid analytic_eps(const GaussianSourceModel& model, const NoiseSchedule& sched, const FeatureGrid& x_t,
                         const Condition& c, int t);

/// Posterior component responsibilities at (x_t, t), in components() order.
std::vector<double> responsibilities(const GaussianSourceModel& model, const NoiseSchedule& sched,
                                     const FeatureGrid& x_t, int t);

class AnalyticDenoiser final : public Denoiser {
 public:
  AnalyticDenoiser(GaussianSourceModel model, NoiseSchedule sched)
      : model_(std::move(model)), sched_(std::move(sched)) {}

  FeatureGrid predict_eps(const FeatureGrid& x_t, const Condition& c, int t) const override {
    return analytic_eps(model_, sched_, x_t, c, t);
  }
  bool supports(const Condition& c) const override { return c.is_null() || model_.find(c) != nullptr; }
  GridDims dims() const override { return model_.dims(); }

  const GaussianSourceModel& model() const { return model_; }
  const NoiseSchedule& schedule() const { return sched_; }

 private:
  GaussianSourceModel model_;
  NoiseSchedule sched_;
};

}  // namespace zsep
