#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zsep/denoiser.hpp"
#include "zsep/scene.hpp"
#include "zsep/schedule.hpp"

namespace zsep {

inline constexpr double kSiSdrCapDb = 100.0;

/// Scale-invariant SDR in dB, clamped to [-100, 100]. Throws if ref is all zero.
double si_sdr(const FeatureGrid& est, const FeatureGrid& ref);

/// mean |log(1 + |a|) - log(1 + |b|)| over all cells.
double spectral_l1(const FeatureGrid& a, const FeatureGrid& b);

inline constexpr int kEmbedBands = 8;
inline constexpr int kEmbedDim = 2 * kEmbedBands + 2;

/// Weight of bin f in triangular band b. Band edges sit at equal steps of
/// log(1 + f) between 0 and log(F); band b spans edges b .. b + 2 and peaks
/// at edge b + 1.
double band_weight(int band, double bin, int bins);

/// Per band: mean and (population) std over frames of the band energy
/// E_b(t) = sum_{c,f} w_b(f) g(c,t,f)^2, then the spectral centroid (in bins)
/// and spectral flatness of the total power per bin. The last two are 0 for
/// an all-zero grid.
Eigen::VectorXd feature_embed(const FeatureGrid& g);

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  std::size_t count = 0;

  static GaussianStats fit(const std::vector<Eigen::VectorXd>& samples);
  bool operator==(const GaussianStats& o) const {
    return count == o.count && mean == o.mean && covariance == o.covariance;
  }
};

/// ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa^1/2 Sb Sa^1/2)^1/2) with square roots
/// from symmetric eigendecompositions, eigenvalues clipped at 0. A covariance
/// whose smallest eigenvalue is below 1e-9 is regularised with 1e-6 I first.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

/// Fréchet distance between Gaussian fits of feature_embed over two sets.
double desk_fad(const std::vector<FeatureGrid>& a, const std::vector<FeatureGrid>& b);

struct MetricGapRow {
  std::uint64_t scene_id = 0;
  std::string method;
  double si_sdr_db = 0.0;
  double spectral_l1 = 0.0;
  double desk_fad = 0.0;
};

struct MetricGapReport {
  std::vector<MetricGapRow> rows;
  double identity_fad = 0.0;
  double roundtrip_fad = 0.0;
  double identity_median_si_sdr = 0.0;
  double roundtrip_median_si_sdr = 0.0;
};

/// For each mixture: an identity copy and a DDIM invert/generate round trip
/// (null condition, `steps` uniform steps). SI-SDR and spectral L1 are taken
/// against the mixture; desk-FAD compares each method's output set with the
/// mixture set. Rows come in (identity, roundtrip) pairs per scene.
MetricGapReport metric_gap_demo(const Denoiser& model, const NoiseSchedule& sched, const std::vector<SyntheticScene>& scenes,
                         int steps = 50);

double median(std::vector<double> v);
double mean(const std::vector<double>& v);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace zsep
