#include "zsep/analytic_denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace zsep {

GaussianSourceModel::GaussianSourceModel(std::vector<LabelGaussian> labels, std::vector<std::vector<int>> composites,
                                         std::vector<double> priors)
    : labels_(std::move(labels)), composites_(std::move(composites)) {
  if (labels_.empty()) throw std::invalid_argument("GaussianSourceModel: no labels");
  dims_ = labels_.front().mean.dims();
  for (const auto& l : labels_) {
    require_same_dims(l.mean, labels_.front().mean, "GaussianSourceModel mean");
    require_same_dims(l.stddev, l.mean, "GaussianSourceModel stddev");
    for (double s : l.stddev.values()) {
      if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("GaussianSourceModel: stddev must be positive");
    }
    for (const auto& other : labels_) {
      if (&other != &l && other.id == l.id) throw std::invalid_argument("GaussianSourceModel: duplicate label id");
    }
  }

  const std::size_t n_components = labels_.size() + composites_.size();
  if (priors.empty()) priors.assign(n_components, 1.0);
  if (priors.size() != n_components) throw std::invalid_argument("GaussianSourceModel: one prior per component");
  double total = 0.0;
  for (double p : priors) {
    if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("GaussianSourceModel: priors must be positive");
    total += p;
  }

  auto label_index = [&](int id) -> const LabelGaussian& {
    for (const auto& l : labels_) {
      if (l.id == id) return l;
    }
    throw std::invalid_argument("GaussianSourceModel: composite refers to unknown label " + std::to_string(id));
  };

  std::size_t k = 0;
  for (const auto& l : labels_) {
    FeatureGrid var = l.stddev;
    for (double& v : var.values()) v *= v;
    components_.push_back({Condition::label(l.id), l.mean, std::move(var), priors[k++] / total});
  }
  for (auto& ids : composites_) {
    Condition c = Condition::composite(ids);
    if (c.kind() != Condition::Kind::composite) {
      throw std::invalid_argument("GaussianSourceModel: composite needs at least two labels");
    }
    ids.assign(c.ids().begin(), c.ids().end());
    FeatureGrid mean(dims_);
    FeatureGrid var(dims_);
    for (int id : ids) {
      const auto& l = label_index(id);
      mean += l.mean;
      for (std::size_t i = 0; i < var.size(); ++i) var[i] += l.stddev[i] * l.stddev[i];
    }
    components_.push_back({std::move(c), std::move(mean), std::move(var), priors[k++] / total});
  }
}

GaussianSourceModel GaussianSourceModel::fit(const std::vector<LabeledGrid>& data, double min_std) {
  std::map<int, std::vector<const FeatureGrid*>> by_label;
  for (const auto& s : data) {
    if (s.condition.kind() == Condition::Kind::label) by_label[s.condition.label_id()].push_back(&s.grid);
  }
  if (by_label.empty()) throw std::invalid_argument("GaussianSourceModel::fit: no singleton samples");

  std::vector<LabelGaussian> labels;
  for (const auto& [id, grids] : by_label) {
    const GridDims dims = grids.front()->dims();
    FeatureGrid mean(dims);
    for (const auto* g : grids) mean += *g;
    mean *= 1.0 / static_cast<double>(grids.size());
    FeatureGrid sd(dims);
    for (const auto* g : grids) {
      for (std::size_t i = 0; i < sd.size(); ++i) {
        const double d = (*g)[i] - mean[i];
        sd[i] += d * d;
      }
    }
    const double denom = grids.size() > 1 ? static_cast<double>(grids.size() - 1) : 1.0;
    for (double& v : sd.values()) v = std::max(std::sqrt(v / denom), min_std);
    labels.push_back({id, std::move(mean), std::move(sd)});
  }
  std::vector<std::vector<int>> pairs;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = i + 1; j < labels.size(); ++j) pairs.push_back({labels[i].id, labels[j].id});
  }
  return GaussianSourceModel(std::move(labels), std::move(pairs));
}

const GaussianComponent* GaussianSourceModel::find(const Condition& c) const {
  for (const auto& comp : components_) {
    if (comp.condition == c) return &comp;
  }
  return nullptr;
}

namespace {

void check_args(const GaussianSourceModel& model, const NoiseSchedule& sched, const FeatureGrid& x_t, int t) {
  if (t < 1 || t > sched.steps()) throw std::invalid_argument("analytic_eps: t outside schedule");
  if (x_t.dims() != model.dims()) throw std::invalid_argument("analytic_eps: dims mismatch");
}

FeatureGrid component_eps(const GaussianComponent& comp, double ab, const FeatureGrid& x_t) {
  const double sa = std::sqrt(ab);
  const double sn = std::sqrt(1.0 - ab);
  FeatureGrid eps(x_t.dims());
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    const double s2 = comp.variance[i];
    const double v = ab * s2 + (1.0 - ab);
    const double x0 = comp.mean[i] + (sa * s2 / v) * (x_t[i] - sa * comp.mean[i]);
    eps[i] = (x_t[i] - sa * x0) / sn;
  }
  return eps;
}

}  // namespace

std::vector<double> responsibilities(const GaussianSourceModel& model, const NoiseSchedule& sched,
                                     const FeatureGrid& x_t, int t) {
  check_args(model, sched, x_t, t);
  const double ab = sched.alpha_bar(t);
  const double sa = std::sqrt(ab);
  const auto& comps = model.components();
  std::vector<double> logp(comps.size());
  for (std::size_t k = 0; k < comps.size(); ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x_t.size(); ++i) {
      const double v = ab * comps[k].variance[i] + (1.0 - ab);
      const double d = x_t[i] - sa * comps[k].mean[i];
      acc += std::log(2.0 * std::numbers::pi * v) + d * d / v;
    }
    logp[k] = std::log(comps[k].prior) - 0.5 * acc;
  }
  const double top = *std::max_element(logp.begin(), logp.end());
  double z = 0.0;
  for (double& l : logp) {
    l = std::exp(l - top);
    z += l;
  }
  for (double& l : logp) l /= z;
  return logp;
}

FeatureGrid analytic_eps(const GaussianSourceModel& model, const NoiseSchedule& sched, const FeatureGrid& x_t,
                         const Condition& c, int t) {
  check_args(model, sched, x_t, t);
  const double ab = sched.alpha_bar(t);
  if (!c.is_null()) {
    const GaussianComponent* comp = model.find(c);
    if (!comp) throw std::invalid_argument("analytic_eps: unsupported condition " + c.to_string());
    return component_eps(*comp, ab, x_t);
  }
  const auto r = responsibilities(model, sched, x_t, t);
  FeatureGrid eps(x_t.dims());
  const auto& comps = model.components();
  for (std::size_t k = 0; k < comps.size(); ++k) {
    if (r[k] == 0.0) continue;
    const FeatureGrid e = component_eps(comps[k], ab, x_t);
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] += r[k] * e[i];
  }
  return eps;
}

}  // namespace zsep
