#include <gtest/gtest.h>

#include <cmath>

#include "zsep/condition.hpp"
#include "zsep/random.hpp"
#include "zsep/scene.hpp"

using namespace zsep;

TEST(Condition, FactoriesAndParsing) {
  EXPECT_TRUE(Condition().is_null());
  EXPECT_EQ(Condition::composite({3, 1, 3}).to_string(), "composite:1+3");
  EXPECT_EQ(Condition::composite({2}), Condition::label(2));
  for (const char* s : {"null", "label:4", "composite:0+2+5", "random:99"}) {
    EXPECT_EQ(Condition::parse(s).to_string(), s);
  }
  EXPECT_EQ(Condition::parse("composite:2+1"), Condition::composite({1, 2}));
  EXPECT_THROW(Condition::parse("label:x"), std::invalid_argument);
  EXPECT_THROW(Condition::parse("speech"), std::invalid_argument);
  EXPECT_THROW(Condition::composite({}), std::invalid_argument);
  EXPECT_THROW(Condition::label(-1), std::invalid_argument);
}

TEST(LabelRegistry, DefaultAndValidation) {
  const auto reg = LabelRegistry::default_registry();
  EXPECT_EQ(reg.size(), 4u);
  EXPECT_EQ(reg.get(3).fundamental_bin, 7);
  EXPECT_THROW(reg.get(9), std::out_of_range);
  LabelRegistry r;
  r.add({0, "a", 2, 1, 0.5, 4.0, 1.0});
  EXPECT_THROW(r.add({0, "b", 2, 1, 0.5, 4.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(r.add({1, "c", 0, 1, 0.5, 4.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(r.add({2, "d", 2, 1, 0.5, 0.0, 1.0}), std::invalid_argument);
}

TEST(GenSource, DeterministicAndNonNegative) {
  const auto reg = LabelRegistry::default_registry();
  const GridDims d{1, 16, 32};
  const FeatureGrid a = gen_source(reg.get(0), d, 123);
  EXPECT_EQ(a, gen_source(reg.get(0), d, 123));
  EXPECT_NE(a, gen_source(reg.get(0), d, 124));
  for (double v : a.values()) EXPECT_GE(v, 0.0);
}

TEST(GenSource, EnergyMatchesClosedFormInExpectation) {
  // Monte-Carlo oracle for the expected energy over seeds.
  const auto reg = LabelRegistry::default_registry();
  const GridDims d{2, 16, 32};
  for (const auto& l : reg.labels()) {
    const int n = 4000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double e = squared_norm(gen_source(l, d, derive_seed(77, static_cast<std::uint64_t>(i))));
      sum += e;
      sum2 += e * e;
    }
    const double m = sum / n;
    const double se = std::sqrt((sum2 / n - m * m) / n);
    EXPECT_NEAR(m, expected_source_energy(l, d), 4.0 * se) << l.name;
  }
}

TEST(GenSource, DropsHarmonicsBeyondBinsWithWarning) {
  const SourceLabel l{0, "x", 5, 4, 0.5, 4.0, 1.0};
  std::vector<std::string> warnings;
  const FeatureGrid g = gen_source(l, GridDims{1, 4, 12}, 1, &warnings);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("2 harmonic"), std::string::npos);
  EXPECT_EQ(g.size(), 48u);
  EXPECT_THROW(gen_source(l, GridDims{1, 4, 5}, 1), std::invalid_argument);
}

TEST(Mix, IsElementwiseSum) {
  const GridDims d{1, 2, 2};
  const FeatureGrid a(d, std::vector<double>{1, 2, 3, 4});
  const FeatureGrid b(d, std::vector<double>{0.5, 0.5, 0.5, 0.5});
  EXPECT_EQ(mix({a, b}), a + b);
  EXPECT_THROW(mix({}), std::invalid_argument);
  EXPECT_THROW(mix({a, FeatureGrid(GridDims{1, 1, 4})}), std::invalid_argument);
}

TEST(Dataset, LayoutAndPairs) {
  const auto reg = LabelRegistry::default_registry();
  const auto data = make_dataset(reg.labels(), 3, true, GridDims{1, 8, 16}, 5);
  ASSERT_EQ(data.size(), 4u * 3u + 6u * 3u);
  EXPECT_EQ(data[0].condition, Condition::label(0));
  EXPECT_EQ(data[11].condition, Condition::label(3));
  EXPECT_EQ(data[12].condition, Condition::composite({0, 1}));
  EXPECT_EQ(data.back().condition, Condition::composite({2, 3}));
  EXPECT_EQ(make_dataset(reg.labels(), 3, false, GridDims{1, 8, 16}, 5).size(), 12u);
}

TEST(Scenes, SceneSeedsAreStableWhenMoreScenesAreAdded) {
  const auto reg = LabelRegistry::default_registry();
  const auto few = make_two_source_scenes(reg, 3, GridDims{1, 8, 16}, 9);
  const auto many = make_two_source_scenes(reg, 10, GridDims{1, 8, 16}, 9);
  for (std::size_t k = 0; k < few.size(); ++k) {
    EXPECT_EQ(few[k].mixture, many[k].mixture);
    EXPECT_EQ(few[k].id, k);
  }
  for (const auto& s : many) {
    ASSERT_EQ(s.sources.size(), 2u);
    EXPECT_NE(s.sources[0].label.id, s.sources[1].label.id);
    EXPECT_EQ(s.mixture, s.sources[0].grid + s.sources[1].grid);
  }
}

TEST(Scenes, MakeSceneAppliesGainsAndSourceSum) {
  const auto reg = LabelRegistry::default_registry();
  const SyntheticScene s = make_scene(reg, {0, 2}, GridDims{1, 8, 16}, 4, {2.0, 1.0});
  EXPECT_EQ(s.sources[0].grid, 2.0 * gen_source(reg.get(0), GridDims{1, 8, 16}, derive_seed(4, 0)));
  EXPECT_EQ(s.source_sum({2}), s.sources[1].grid);
  EXPECT_THROW(s.source_sum({3}), std::invalid_argument);
  EXPECT_THROW(make_scene(reg, {0}, GridDims{1, 8, 16}, 4, {1.0, 1.0}), std::invalid_argument);
}
