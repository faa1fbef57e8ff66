#include <gtest/gtest.h>

#include <atomic>
#include <map>
#include <mutex>

#include "test_helpers.hpp"
#include "zsep/metrics.hpp"
#include "zsep/separation.hpp"

using namespace zsep;
using namespace zsep::testing;

namespace {

const GridDims kDims{1, 8, 16};

class PerConditionCounter final : public Denoiser {
 public:
  explicit PerConditionCounter(const Denoiser& inner) : inner_(inner) {}
  FeatureGrid predict_eps(const FeatureGrid& x, const Condition& c, int t) const override {
    std::lock_guard lock(mu_);
    ++calls_[c.to_string()];
    return inner_.predict_eps(x, c, t);
  }
  bool supports(const Condition& c) const override { return inner_.supports(c); }
  GridDims dims() const override { return inner_.dims(); }
  int calls(const Condition& c) const {
    std::lock_guard lock(mu_);
    auto it = calls_.find(c.to_string());
    return it == calls_.end() ? 0 : it->second;
  }
  int total() const {
    std::lock_guard lock(mu_);
    int n = 0;
    for (const auto& [k, v] : calls_) n += v;
    return n;
  }

 private:
  const Denoiser& inner_;
  mutable std::mutex mu_;
  mutable std::map<std::string, int> calls_;
};

SourceLabel bare_label(int id) {
  SourceLabel l;
  l.id = id;
  l.name = "l" + std::to_string(id);
  return l;
}

// Two-source scene drawn from the label Gaussians of half_split_model.
SyntheticScene prior_scene(const GaussianSourceModel& m, std::uint64_t id) {
  SyntheticScene s;
  s.id = id;
  s.seed = derive_seed(99, id);
  std::vector<FeatureGrid> grids;
  for (int label : {0, 1}) {
    const auto* c = m.find(Condition::label(label));
    FeatureGrid g = random_grid(kDims, derive_seed(s.seed, label));
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = c->mean[i] + std::sqrt(c->variance[i]) * g[i];
    s.sources.push_back({bare_label(label), g});
    grids.push_back(g);
  }
  s.mixture = mix(grids);
  return s;
}

struct Fixture {
  NoiseSchedule sched = default_schedule();
  GaussianSourceModel gm = half_split_model(kDims);
  AnalyticDenoiser model{gm, sched};
};

// Untrained tiny model: supports random prompts, unlike the analytic one.
TinyDenoiser untrained_tiny(const NoiseSchedule& sched) {
  TinyDenoiserSpec spec;
  spec.hidden = 16;
  return TinyDenoiser(init_tiny_params(spec, kDims, {Condition::label(0), Condition::label(1)}, 4.0, 3), sched);
}

SeparationRequest base_request(const SyntheticScene& s) {
  SeparationRequest r;
  r.mixture = s.mixture;
  r.c_inv = Condition::null();
  r.plan = StepPlan::uniform(1000, 25);
  r.seed = 5;
  return r;
}

}  // namespace

TEST(Separate, NullTargetWithoutGuidanceReturnsMixture) {
  Fixture f;
  const SyntheticScene s = prior_scene(f.gm, 0);
  SeparationRequest r = base_request(s);
  r.omega = 0.0;
  r.targets = {Condition::null()};
  const SeparationResult res = separate(f.model, f.sched, r, &s);
  EXPECT_LT(max_abs_diff(res.outputs[0], s.mixture), 1e-9);
  ASSERT_TRUE(res.diagnostics[0].si_sdr_db.has_value());
  EXPECT_EQ(*res.diagnostics[0].si_sdr_db, kSiSdrCapDb);
}

TEST(Separate, OneInversionSharedAcrossTargets) {
  Fixture f;
  PerConditionCounter counting(f.model);
  const SyntheticScene s = prior_scene(f.gm, 1);
  SeparationRequest r = base_request(s);
  r.omega = 1.5;
  r.targets = {Condition::label(0), Condition::label(1)};
  separate(counting, f.sched, r);
  const int steps = static_cast<int>(r.plan.size());
  // inversion: one null call per step; each guided reverse pass: one null and one target call per step
  EXPECT_EQ(counting.calls(Condition::null()), steps + 2 * steps);
  EXPECT_EQ(counting.calls(Condition::label(0)), steps);
  EXPECT_EQ(counting.calls(Condition::label(1)), steps);
}

TEST(Separate, GuidanceSkipsUnusedBranch) {
  Fixture f;
  PerConditionCounter counting(f.model);
  const SyntheticScene s = prior_scene(f.gm, 2);
  SeparationRequest r = base_request(s);
  r.omega = 1.0;
  r.targets = {Condition::label(0)};
  separate(counting, f.sched, r);
  EXPECT_EQ(counting.total(), 2 * static_cast<int>(r.plan.size()));
}

TEST(Separate, TargetOrderDoesNotMatter) {
  Fixture f;
  const SyntheticScene s = prior_scene(f.gm, 3);
  for (SamplerKind kind : {SamplerKind::ddpm, SamplerKind::ddim}) {
    SeparationRequest r = base_request(s);
    r.kind = kind;
    r.targets = {Condition::label(0), Condition::label(1)};
    const SeparationResult ab = separate(f.model, f.sched, r);
    r.targets = {Condition::label(1), Condition::label(0)};
    const SeparationResult ba = separate(f.model, f.sched, r);
    EXPECT_EQ(ab.outputs[0], ba.outputs[1]);
    EXPECT_EQ(ab.outputs[1], ba.outputs[0]);
    EXPECT_EQ(ab.trace_id, ba.trace_id);
  }
}

TEST(Separate, DeterministicAndSeedSensitive) {
  Fixture f;
  const SyntheticScene s = prior_scene(f.gm, 4);
  SeparationRequest r = base_request(s);
  r.targets = {Condition::label(0)};
  const SeparationResult a = separate(f.model, f.sched, r);
  const SeparationResult b = separate(f.model, f.sched, r);
  EXPECT_EQ(a.outputs[0], b.outputs[0]);
  r.seed = 6;
  EXPECT_NE(separate(f.model, f.sched, r).trace_id, a.trace_id);
}

TEST(Separate, GuidedTargetBeatsMixtureBaseline) {
  Fixture f;
  const SyntheticScene s = prior_scene(f.gm, 5);
  SeparationRequest r = base_request(s);
  r.targets = {Condition::label(0), Condition::label(1)};
  const SeparationResult res = separate(f.model, f.sched, r, &s);
  for (std::size_t k = 0; k < 2; ++k) {
    const FeatureGrid ref = target_truth(s, r.targets[k]);
    EXPECT_GT(*res.diagnostics[k].si_sdr_db, si_sdr(s.mixture, ref) + 3.0) << k;
  }
}

TEST(Separate, RejectsBadRequests) {
  Fixture f;
  const SyntheticScene s = prior_scene(f.gm, 6);
  SeparationRequest r = base_request(s);
  EXPECT_THROW(separate(f.model, f.sched, r), std::invalid_argument);
  r.targets = {Condition::label(7)};
  EXPECT_THROW(separate(f.model, f.sched, r), std::invalid_argument);
  r.targets = {Condition::label(0)};
  r.omega = -0.5;
  EXPECT_THROW(separate(f.model, f.sched, r), std::invalid_argument);
  r.omega = 1.0;
  r.mixture = FeatureGrid(GridDims{1, 2, 2});
  EXPECT_THROW(separate(f.model, f.sched, r), std::invalid_argument);
}

TEST(TargetTruth, NullIsMixtureRandomHasNone) {
  Fixture f;
  const SyntheticScene s = prior_scene(f.gm, 7);
  EXPECT_EQ(target_truth(s, Condition::null()), s.mixture);
  EXPECT_EQ(target_truth(s, Condition::label(1)), s.sources[1].grid);
  EXPECT_LT(max_abs_diff(target_truth(s, Condition::composite({0, 1})), s.mixture), 1e-12);
  EXPECT_THROW(target_truth(s, Condition::random(1)), std::invalid_argument);
}

TEST(SweepOmega, ShapeAndZeroOmegaReproducesMixture) {
  Fixture f;
  std::vector<SyntheticScene> scenes{prior_scene(f.gm, 0), prior_scene(f.gm, 1), prior_scene(f.gm, 2)};
  ExperimentSettings st;
  st.plan = StepPlan::uniform(1000, 25);
  st.seed = 11;
  const SweepTable t = sweep_omega(f.model, f.sched, scenes, {0.0, 1.0}, st);
  ASSERT_EQ(t.rows.size(), 3u * 2u * 2u);
  ASSERT_EQ(t.summary.size(), 2u);
  for (const auto& row : t.rows) {
    EXPECT_EQ(row.steps, 25);
    EXPECT_EQ(row.seed, derive_seed(11, row.scene_id));
    // With omega 0 the unconditional branch replays the null inversion exactly.
    if (row.omega == 0.0) EXPECT_GE(row.si_sdr_vs_mixture_db, 40.0);
  }
  EXPECT_GT(t.summary[1].median_si_sdr_db, t.summary[0].median_si_sdr_db);
  EXPECT_THROW(sweep_omega(f.model, f.sched, scenes, {1.0, 1.0}, st), std::invalid_argument);
}

TEST(SweepOmega, SingleOmegaSingleScene) {
  Fixture f;
  ExperimentSettings st;
  st.plan = StepPlan::uniform(1000, 10);
  const SweepTable t = sweep_omega(f.model, f.sched, {prior_scene(f.gm, 0)}, {1.0}, st);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].target_label, Condition::label(0).to_string());
  EXPECT_EQ(t.rows[0].desk_fad, t.summary[0].desk_fad);
}

TEST(SweepOmega, ThreadsDoNotChangeResults) {
  Fixture f;
  std::vector<SyntheticScene> scenes;
  for (std::uint64_t k = 0; k < 5; ++k) scenes.push_back(prior_scene(f.gm, k));
  ExperimentSettings st;
  st.plan = StepPlan::uniform(1000, 10);
  const SweepTable one = sweep_omega(f.model, f.sched, scenes, {0.5, 1.5}, st, 1);
  const SweepTable many = sweep_omega(f.model, f.sched, scenes, {0.5, 1.5}, st, 3);
  ASSERT_EQ(one.rows.size(), many.rows.size());
  for (std::size_t i = 0; i < one.rows.size(); ++i) {
    EXPECT_EQ(one.rows[i].scene_id, many.rows[i].scene_id);
    EXPECT_EQ(one.rows[i].si_sdr_db, many.rows[i].si_sdr_db);
  }
  EXPECT_EQ(one.summary[1].desk_fad, many.summary[1].desk_fad);
}

TEST(AblatePrompts, ThreeRowsPerSceneWithBaselineDeltas) {
  Fixture f;
  std::vector<SyntheticScene> scenes{prior_scene(f.gm, 0), prior_scene(f.gm, 1)};
  ExperimentSettings st;
  st.plan = StepPlan::uniform(1000, 10);
  const TinyDenoiser tiny = untrained_tiny(f.sched);
  const AblationTable t = ablate_prompts(tiny, f.sched, scenes, st);
  ASSERT_EQ(t.rows.size(), 6u);
  ASSERT_EQ(t.summary.size(), 3u);
  EXPECT_EQ(t.rows[0].config, kAblationBaseline);
  EXPECT_EQ(t.rows[1].config, kAblationRandom);
  EXPECT_EQ(t.rows[2].config, kAblationOtherInv);
  EXPECT_EQ(t.rows[0].delta_si_sdr_db, 0.0);
  EXPECT_EQ(t.rows[2].c_inv, Condition::label(1).to_string());
  EXPECT_EQ(t.rows[2].c_rev, Condition::label(0).to_string());
  EXPECT_NEAR(t.rows[1].delta_si_sdr_db, t.rows[1].si_sdr_db - t.rows[0].si_sdr_db, 1e-12);
  EXPECT_EQ(t.summary[0].median_delta_si_sdr_db, 0.0);
}

TEST(AblatePrompts, RejectsSingleSourceScenes) {
  Fixture f;
  SyntheticScene s = prior_scene(f.gm, 0);
  s.sources.pop_back();
  ExperimentSettings st;
  EXPECT_THROW(ablate_prompts(f.model, f.sched, {s}, st), std::invalid_argument);
}

TEST(ParallelFor, CoversAllIndicesAndRethrowsLowest) {
  std::vector<std::atomic<int>> hits(50);
  parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  try {
    parallel_for(20, 4, [](std::size_t i) {
      if (i == 3 || i == 17) throw std::runtime_error(std::to_string(i));
    });
    FAIL() << "expected a throw";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "3");
  }
}
