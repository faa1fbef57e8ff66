#include "zsep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "zsep/inversion.hpp"

namespace zsep {

double si_sdr(const FeatureGrid& est, const FeatureGrid& ref) {
  require_same_dims(est, ref, "si_sdr");
  const double ref_energy = squared_norm(ref);
  if (ref_energy == 0.0) throw std::invalid_argument("si_sdr: reference is all zero");
  const double alpha = dot(est, ref) / ref_energy;
  double target = 0.0;
  double residual = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double s = alpha * ref[i];
    target += s * s;
    residual += (est[i] - s) * (est[i] - s);
  }
  if (residual == 0.0) return kSiSdrCapDb;
  if (target == 0.0) return -kSiSdrCapDb;
  return std::clamp(10.0 * std::log10(target / residual), -kSiSdrCapDb, kSiSdrCapDb);
}

double spectral_l1(const FeatureGrid& a, const FeatureGrid& b) {
  require_same_dims(a, b, "spectral_l1");
  if (a.empty()) throw std::invalid_argument("spectral_l1: empty grid");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(std::log1p(std::abs(a[i])) - std::log1p(std::abs(b[i])));
  return acc / static_cast<double>(a.size());
}

double band_weight(int band, double bin, int bins) {
  if (bins < 2) return band == 0 ? 1.0 : 0.0;
  const double top = std::log(static_cast<double>(bins));
  const double step = top / (kEmbedBands + 1);
  const double u = std::log1p(bin);
  const double lo = band * step;
  const double mid = lo + step;
  const double hi = mid + step;
  if (u <= lo || u >= hi) return 0.0;
  return u <= mid ? (u - lo) / step : (hi - u) / step;
}

Eigen::VectorXd feature_embed(const FeatureGrid& g) {
  const auto& d = g.dims();
  const int bins = static_cast<int>(d.bins);
  Eigen::MatrixXd w(kEmbedBands, bins);
  for (int b = 0; b < kEmbedBands; ++b) {
    for (int f = 0; f < bins; ++f) w(b, f) = band_weight(b, f, bins);
  }

  // power(t, f) summed over channels
  Eigen::MatrixXd power = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d.frames), bins);
  for (std::size_t c = 0; c < d.channels; ++c) {
    for (std::size_t t = 0; t < d.frames; ++t) {
      for (std::size_t f = 0; f < d.bins; ++f) {
        const double v = g.at(c, t, f);
        power(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(f)) += v * v;
      }
    }
  }
  const Eigen::MatrixXd energy = power * w.transpose();  // frames x bands

  Eigen::VectorXd out = Eigen::VectorXd::Zero(kEmbedDim);
  const double n = static_cast<double>(d.frames);
  for (int b = 0; b < kEmbedBands; ++b) {
    const double m = energy.col(b).sum() / n;
    const double var = (energy.col(b).array() - m).square().sum() / n;
    out(2 * b) = m;
    out(2 * b + 1) = std::sqrt(var);
  }

  const Eigen::VectorXd spectrum = power.colwise().sum().transpose();
  const double total = spectrum.sum();
  if (total > 0.0) {
    double centroid = 0.0;
    double log_mean = 0.0;
    constexpr double floor = 1e-12;
    for (int f = 0; f < bins; ++f) {
      centroid += f * spectrum(f);
      log_mean += std::log(spectrum(f) + floor);
    }
    out(2 * kEmbedBands) = centroid / total;
    out(2 * kEmbedBands + 1) = std::exp(log_mean / bins) / (total / bins + floor);
  }
  return out;
}

GaussianStats GaussianStats::fit(const std::vector<Eigen::VectorXd>& samples) {
  if (samples.empty()) throw std::invalid_argument("GaussianStats::fit: no samples");
  const Eigen::Index dim = samples.front().size();
  GaussianStats s;
  s.count = samples.size();
  s.mean = Eigen::VectorXd::Zero(dim);
  for (const auto& x : samples) {
    if (x.size() != dim) throw std::invalid_argument("GaussianStats::fit: inconsistent dimension");
    s.mean += x;
  }
  s.mean /= static_cast<double>(s.count);
  s.covariance = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& x : samples) {
    const Eigen::VectorXd c = x - s.mean;
    s.covariance.noalias() += c * c.transpose();
  }
  if (s.count > 1) s.covariance /= static_cast<double>(s.count - 1);
  s.covariance = 0.5 * (s.covariance + s.covariance.transpose());
  return s;
}

namespace {

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw std::runtime_error("frechet_distance: eigendecomposition failed");
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd regularised(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < 1e-9) {
    return cov + 1e-6 * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
  }
  return cov;
}

}  // namespace

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.mean.size() != b.mean.size() || a.covariance.rows() != a.mean.size() ||
      b.covariance.rows() != b.mean.size()) {
    throw std::invalid_argument("frechet_distance: dimension mismatch");
  }
  if (!a.mean.allFinite() || !b.mean.allFinite() || !a.covariance.allFinite() || !b.covariance.allFinite()) {
    throw std::invalid_argument("frechet_distance: non-finite statistics");
  }
  if (a.mean == b.mean && a.covariance == b.covariance) return 0.0;
  const Eigen::MatrixXd sa = regularised(a.covariance);
  const Eigen::MatrixXd sb = regularised(b.covariance);
  const Eigen::MatrixXd ra = sqrt_psd(sa);
  Eigen::MatrixXd inner = ra * sb * ra;
  inner = 0.5 * (inner + inner.transpose());
  const double cross = sqrt_psd(inner).trace();
  const double d = (a.mean - b.mean).squaredNorm() + sa.trace() + sb.trace() - 2.0 * cross;
  return std::max(d, 0.0);
}

double desk_fad(const std::vector<FeatureGrid>& a, const std::vector<FeatureGrid>& b) {
  std::vector<Eigen::VectorXd> ea;
  std::vector<Eigen::VectorXd> eb;
  ea.reserve(a.size());
  eb.reserve(b.size());
  for (const auto& g : a) ea.push_back(feature_embed(g));
  for (const auto& g : b) eb.push_back(feature_embed(g));
  return frechet_distance(GaussianStats::fit(ea), GaussianStats::fit(eb));
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean of empty set");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("spearman: need two equal-length series");
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double ma = mean(ra);
  const double mb = mean(rb);
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0.0 || db == 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

MetricGapReport metric_gap_demo(const Denoiser& model, const NoiseSchedule& sched, const std::vector<SyntheticScene>& scenes,
                         int steps) {
  if (scenes.empty()) throw std::invalid_argument("metric_gap_demo: no scenes");
  const StepPlan plan = StepPlan::uniform(sched.steps(), steps);
  const GuidanceConfig g{0.0, Condition::null()};
  std::vector<FeatureGrid> mixtures;
  std::vector<FeatureGrid> trips;
  for (const auto& s : scenes) {
    mixtures.push_back(s.mixture);
    const InversionTrace trace = ddim_invert(model, sched, plan, s.mixture, Condition::null());
    trips.push_back(reconstruct(model, sched, trace, g));
  }
  MetricGapReport rep;
  rep.identity_fad = desk_fad(mixtures, mixtures);
  rep.roundtrip_fad = desk_fad(trips, mixtures);
  std::vector<double> id_sdr;
  std::vector<double> rt_sdr;
  for (std::size_t k = 0; k < scenes.size(); ++k) {
    const auto& mix = mixtures[k];
    rep.rows.push_back({scenes[k].id, "identity", si_sdr(mix, mix), spectral_l1(mix, mix), rep.identity_fad});
    rep.rows.push_back({scenes[k].id, "ddim_roundtrip", si_sdr(trips[k], mix), spectral_l1(trips[k], mix),
                        rep.roundtrip_fad});
    id_sdr.push_back(rep.rows[rep.rows.size() - 2].si_sdr_db);
    rt_sdr.push_back(rep.rows.back().si_sdr_db);
  }
  rep.identity_median_si_sdr = median(id_sdr);
  rep.roundtrip_median_si_sdr = median(rt_sdr);
  return rep;
}

}  // namespace zsep
