#include <gtest/gtest.h>

#include <cmath>

#include "zsep/schedule.hpp"

using namespace zsep;

// Reference values below were evaluated at 30 significant digits with mpmath.

TEST(Schedule, DefaultLinearTerminalAlphaBar) {
  const NoiseSchedule s = default_schedule();
  EXPECT_EQ(s.steps(), 1000);
  EXPECT_EQ(s.alpha_bar(0), 1.0);
  EXPECT_NEAR(s.alpha_bar(1000) / 4.0358297653756833148e-5, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(s.beta(1), 1e-4);
  EXPECT_DOUBLE_EQ(s.beta(1000), 0.02);
  EXPECT_GT(s.alpha_bar(1000), 0.0);
  EXPECT_LT(s.alpha_bar(1000), 0.05);
}

TEST(Schedule, AlphaBarIsCumulativeProductAndDecreasing) {
  for (const NoiseSchedule& s : {default_schedule(), make_cosine_schedule(200)}) {
    for (int t = 1; t <= s.steps(); ++t) {
      ASSERT_GT(s.beta(t), 0.0);
      ASSERT_LT(s.beta(t), 1.0);
      ASSERT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
      ASSERT_NEAR(s.alpha_bar(t) / (s.alpha_bar(t - 1) * (1.0 - s.beta(t))), 1.0, 1e-12);
    }
  }
}

TEST(Schedule, CosineClipsOnlyTheLastBeta) {
  const NoiseSchedule s = make_cosine_schedule(50, 0.008);
  EXPECT_DOUBLE_EQ(s.beta(50), 0.999);
  EXPECT_LT(s.beta(49), 0.999);
  EXPECT_NEAR(s.alpha_bar(49) / 9.7119302987124456327e-4, 1.0, 1e-11);
  EXPECT_NEAR(s.alpha_bar(50) / 9.7119302987124456327e-7, 1.0, 1e-11);
}

TEST(Schedule, SingleStepLinearUsesBetaStart) {
  const NoiseSchedule s = make_linear_schedule(1, 0.3, 0.5);
  EXPECT_DOUBLE_EQ(s.beta(1), 0.3);
}

TEST(Schedule, RejectsInvalidParameters) {
  EXPECT_THROW(make_linear_schedule(0, 1e-4, 0.02), std::invalid_argument);
  EXPECT_THROW(make_linear_schedule(10, 0.0, 0.02), std::invalid_argument);
  EXPECT_THROW(make_linear_schedule(10, 0.1, 0.05), std::invalid_argument);
  EXPECT_THROW(make_linear_schedule(10, 1e-4, 1.0), std::invalid_argument);
  EXPECT_THROW(default_schedule().beta(0), std::out_of_range);
  EXPECT_THROW(default_schedule().alpha_bar(1001), std::out_of_range);
}

TEST(ReverseCoeffs, TwoStepReference) {
  const NoiseSchedule s = make_linear_schedule(2, 0.1, 0.3);
  EXPECT_NEAR(s.alpha_bar(2), 0.63, 1e-15);

  const ReverseCoeffs a = reverse_coeffs(s, 2, 1);
  EXPECT_NEAR(a.mean_x_coef, 1.19522860933439364, 1e-14);
  EXPECT_NEAR(a.mean_eps_coef, -0.58948311891889447927, 1e-14);
  EXPECT_NEAR(a.sigma, 0.28474739872574969861, 1e-14);

  const ReverseCoeffs b = reverse_coeffs(s, 1, 0);
  EXPECT_NEAR(b.mean_x_coef, 1.0540925533894597773, 1e-14);
  EXPECT_NEAR(b.mean_eps_coef, -1.0 / 3.0, 1e-14);
  EXPECT_EQ(b.sigma, 0.0);

  const ReverseCoeffs c = reverse_coeffs(s, 2, 0);
  EXPECT_NEAR(c.mean_x_coef, 1.2598815766974240907, 1e-14);
  EXPECT_NEAR(c.mean_eps_coef, -0.76635604473481338985, 1e-14);

  EXPECT_NEAR(reverse_coeffs(s, 2, 1, VarianceKind::large).sigma, std::sqrt(0.3), 1e-14);
  EXPECT_THROW(reverse_coeffs(s, 1, 1), std::invalid_argument);
}

TEST(StepPlan, UniformIncludesEndsAndDecreases) {
  const StepPlan p = StepPlan::uniform(1000, 50);
  ASSERT_EQ(p.size(), 50u);
  EXPECT_EQ(p.first(), 1000);
  EXPECT_EQ(p.timesteps().back(), 1);
  EXPECT_EQ(p.previous(49), 0);
  for (std::size_t k = 1; k < p.size(); ++k) EXPECT_LT(p.timesteps()[k], p.timesteps()[k - 1]);
  EXPECT_EQ(StepPlan::uniform(1000, 1).timesteps().size(), 1u);
  EXPECT_EQ(StepPlan::uniform(1000, 1).first(), 1000);
  EXPECT_EQ(StepPlan::uniform(7, 7).timesteps().back(), 1);
}

TEST(StepPlan, FromListValidates) {
  EXPECT_NO_THROW(StepPlan::from_list({10, 5, 1}, 10));
  EXPECT_THROW(StepPlan::from_list({10, 10, 1}, 10), std::invalid_argument);
  EXPECT_THROW(StepPlan::from_list({11, 5}, 10), std::invalid_argument);
  EXPECT_THROW(StepPlan::from_list({5, 0}, 10), std::invalid_argument);
  EXPECT_THROW(StepPlan::from_list({}, 10), std::invalid_argument);
  EXPECT_THROW(StepPlan::uniform(10, 11), std::invalid_argument);
}
