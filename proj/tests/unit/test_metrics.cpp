#include <gtest/gtest.h>

#include <cmath>

#include "test_helpers.hpp"
#include "zsep/metrics.hpp"

using namespace zsep;
using namespace zsep::testing;

namespace {

GaussianStats stats1(double mean, double var) {
  GaussianStats s;
  s.mean = Eigen::VectorXd::Constant(1, mean);
  s.covariance = Eigen::MatrixXd::Constant(1, 1, var);
  s.count = 100;
  return s;
}

}  // namespace

TEST(SiSdr, CapsAndScaleInvariance) {
  const FeatureGrid ref = random_grid(GridDims{1, 4, 8}, 1);
  EXPECT_EQ(si_sdr(ref, ref), 100.0);
  EXPECT_EQ(si_sdr(-2.0 * ref, ref), 100.0);
  const FeatureGrid est = random_grid(GridDims{1, 4, 8}, 2) + ref;
  EXPECT_NEAR(si_sdr(3.5 * est, ref), si_sdr(est, ref), 1e-10);
  EXPECT_THROW(si_sdr(est, FeatureGrid(GridDims{1, 4, 8})), std::invalid_argument);
}

TEST(SiSdr, EqualEnergyOrthogonalResidualIsZeroDb) {
  const GridDims d{1, 1, 4};
  const FeatureGrid ref(d, std::vector<double>{1, 1, 0, 0});
  const FeatureGrid noise(d, std::vector<double>{1, -1, 0, 0});
  EXPECT_NEAR(si_sdr(ref + noise, ref), 0.0, 1e-12);
  EXPECT_EQ(si_sdr(noise, ref), -100.0);
}

TEST(SpectralL1, KnownPairAndSymmetry) {
  const GridDims d{1, 1, 4};
  const FeatureGrid a(d, std::vector<double>{0, 1, -2, 3});
  const FeatureGrid b(d, std::vector<double>{1, 1, 0.5, -3});
  // (log 2 + 0 + log(3 / 1.5) + 0) / 4
  EXPECT_NEAR(spectral_l1(a, b), std::log(2.0) / 2.0, 1e-15);
  EXPECT_EQ(spectral_l1(a, b), spectral_l1(b, a));
  EXPECT_EQ(spectral_l1(a, a), 0.0);
}

TEST(FeatureEmbed, ZeroGridAndScaling) {
  const GridDims d{2, 6, 32};
  EXPECT_TRUE(feature_embed(FeatureGrid(d)).isZero(0.0));
  const FeatureGrid g = random_grid(d, 3);
  const Eigen::VectorXd e1 = feature_embed(g);
  const Eigen::VectorXd e2 = feature_embed(2.0 * g);
  ASSERT_EQ(e1.size(), kEmbedDim);
  for (int k = 0; k < 2 * kEmbedBands; ++k) EXPECT_NEAR(e2(k), 4.0 * e1(k), 1e-9 * (1 + std::abs(e1(k))));
  EXPECT_NEAR(e2(2 * kEmbedBands), e1(2 * kEmbedBands), 1e-12);
}

TEST(FeatureEmbed, OneHotGridMatchesBandWeights) {
  // Triangular weights of bin 5 out of 32 on a log(1 + f) axis, 30-digit reference.
  FeatureGrid g(GridDims{1, 2, 32});
  g.at(0, 0, 5) = 1.0;
  const Eigen::VectorXd e = feature_embed(g);
  Eigen::VectorXd expect = Eigen::VectorXd::Zero(kEmbedDim);
  expect(6) = expect(7) = 0.17353374935095943669;
  expect(8) = expect(9) = 0.32646625064904056331;
  expect(16) = 5.0;
  expect(17) = 7.5883958578747053072e-11;
  for (int k = 0; k < kEmbedDim - 1; ++k) EXPECT_NEAR(e(k), expect(k), 1e-12) << k;
  EXPECT_NEAR(e(17) / expect(17), 1.0, 1e-9);
}

TEST(FeatureEmbed, BandWeightsFormAPartitionInside) {
  for (int f = 1; f < 31; ++f) {
    double total = 0.0;
    for (int b = 0; b < kEmbedBands; ++b) total += band_weight(b, f, 32);
    if (std::log1p(f) < std::log(32.0) * kEmbedBands / (kEmbedBands + 1) &&
        std::log1p(f) > std::log(32.0) / (kEmbedBands + 1)) {
      EXPECT_NEAR(total, 1.0, 1e-12) << f;
    }
  }
}

TEST(Frechet, ClosedForms) {
  EXPECT_EQ(frechet_distance(stats1(0, 1), stats1(0, 1)), 0.0);
  EXPECT_NEAR(frechet_distance(stats1(0, 1), stats1(1, 1)), 1.0, 1e-9);
  EXPECT_NEAR(frechet_distance(stats1(0, 1), stats1(0, 4)), 1.0, 1e-9);
}

TEST(Frechet, SymmetricNonNegativeAndMultivariate) {
  std::vector<Eigen::VectorXd> xs, ys;
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd x(3), y(3);
    for (int k = 0; k < 3; ++k) {
      x(k) = rng.normal();
      y(k) = 0.5 + 2.0 * rng.normal();
    }
    y(2) += x(0);
    xs.push_back(x);
    ys.push_back(y);
  }
  const auto a = GaussianStats::fit(xs), b = GaussianStats::fit(ys);
  EXPECT_NEAR(a.covariance(0, 1), a.covariance(1, 0), 1e-15);
  const double ab = frechet_distance(a, b), ba = frechet_distance(b, a);
  EXPECT_GT(ab, 0.0);
  EXPECT_NEAR(ab, ba, 1e-9);
  EXPECT_EQ(frechet_distance(a, a), 0.0);
  // diagonal case: sum of per-axis 1-D distances
  GaussianStats d1, d2;
  d1.mean = Eigen::Vector2d(0, 1);
  d1.covariance = Eigen::Vector2d(1, 4).asDiagonal();
  d2.mean = Eigen::Vector2d(1, 1);
  d2.covariance = Eigen::Vector2d(4, 9).asDiagonal();
  EXPECT_NEAR(frechet_distance(d1, d2), (1 + 1 + 4 - 4) + (0 + 4 + 9 - 12), 1e-9);
}

TEST(Frechet, RejectsMismatchedOrNonFinite) {
  GaussianStats two;
  two.mean = Eigen::Vector2d(0, 0);
  two.covariance = Eigen::Matrix2d::Identity();
  EXPECT_THROW(frechet_distance(stats1(0, 1), two), std::invalid_argument);
  EXPECT_THROW(frechet_distance(stats1(0, 1), stats1(std::nan(""), 1)), std::invalid_argument);
}

TEST(Frechet, ConvergesWithSampleSize) {
  // Two independent draws of the same distribution: the distance shrinks as N doubles.
  auto draw = [](int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Eigen::VectorXd> v;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd x(4);
      for (int k = 0; k < 4; ++k) x(k) = rng.normal() * (1 + k);
      v.push_back(x);
    }
    return GaussianStats::fit(v);
  };
  std::vector<double> small, large;
  for (std::uint64_t t = 0; t < 15; ++t) {
    small.push_back(frechet_distance(draw(200, 2 * t), draw(200, 2 * t + 1)));
    large.push_back(frechet_distance(draw(400, 100 + 2 * t), draw(400, 101 + 2 * t)));
  }
  EXPECT_LT(median(large), median(small));
}

TEST(Stats, MedianMeanSpearman) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_EQ(mean({1, 2, 3}), 2.0);
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0, 1e-15);
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-15);
  EXPECT_NEAR(spearman({1, 2, 2, 3}, {1, 2, 2, 3}), 1.0, 1e-15);
  EXPECT_THROW(median({}), std::invalid_argument);
}

TEST(MetricGap, IdentityIsCappedAndRowsPair) {
  const NoiseSchedule s = default_schedule();
  const GridDims d{1, 8, 16};
  const AnalyticDenoiser model(half_split_model(d), s);
  std::vector<SyntheticScene> scenes;
  for (std::uint64_t k = 0; k < 6; ++k) {
    SyntheticScene sc;
    sc.id = k;
    sc.mixture = random_grid(d, k) + FeatureGrid(d, 2.0);
    scenes.push_back(sc);
  }
  const MetricGapReport r = metric_gap_demo(model, s, scenes, 20);
  ASSERT_EQ(r.rows.size(), 2 * scenes.size());
  EXPECT_EQ(r.rows[0].method, "identity");
  EXPECT_EQ(r.rows[0].si_sdr_db, 100.0);
  EXPECT_EQ(r.identity_fad, 0.0);
  EXPECT_LT(r.roundtrip_median_si_sdr, 100.0);
}
