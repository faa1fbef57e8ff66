#include <gtest/gtest.h>

#include <filesystem>

#include "test_helpers.hpp"
#include "zsep/checkpoint.hpp"
#include "zsep/error.hpp"

using namespace zsep;
using namespace zsep::testing;

namespace {

const GridDims kDims{1, 4, 8};

Checkpoint sample_checkpoint() {
  Checkpoint c;
  add_grid(c, "a", random_grid(kDims, 1));
  c.add({RecordKind::params, "p", {3}, {1.0f, -2.5f, 0.125f}});
  c.add({RecordKind::trace_metadata, "empty", {}, {}});
  return c;
}

TinyDenoiserParams small_params() {
  TinyDenoiserSpec spec;
  spec.hidden = 8;
  spec.time_dim = 4;
  spec.cond_dim = 4;
  TinyDenoiserParams p = init_tiny_params(
      spec, kDims, {Condition::label(0), Condition::label(1), Condition::composite({0, 1})}, 2.5, 7);
  quantize_to_float(p);
  return p;
}

}  // namespace

TEST(Checkpoint, SerializeRoundTripIsByteExact) {
  const Checkpoint c = sample_checkpoint();
  const std::string bytes = serialize(c);
  EXPECT_EQ(bytes.substr(0, 4), "ZSEP");
  const Checkpoint back = deserialize(bytes);
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize(back), bytes);
}

TEST(Checkpoint, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "zsep_ckpt_test.zsep";
  write_checkpoint(path, sample_checkpoint());
  EXPECT_EQ(read_checkpoint(path), sample_checkpoint());
  std::filesystem::remove(path);
  EXPECT_THROW(read_checkpoint(path), std::runtime_error);
}

TEST(Checkpoint, DuplicateAndMissingNames) {
  Checkpoint c = sample_checkpoint();
  EXPECT_THROW(add_grid(c, "a", random_grid(kDims, 2)), std::invalid_argument);
  EXPECT_EQ(c.find("nope"), nullptr);
  EXPECT_THROW(c.get("nope"), FormatError);
}

TEST(Checkpoint, CorruptInputIsRejected) {
  const std::string good = serialize(sample_checkpoint());
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize(bad_magic), FormatError);
  std::string bad_version = good;
  bad_version[4] = 9;
  EXPECT_THROW(deserialize(bad_version), FormatError);
  for (std::size_t cut : {std::size_t{3}, std::size_t{8}, good.size() / 2, good.size() - 1}) {
    EXPECT_THROW(deserialize(good.substr(0, cut)), FormatError) << cut;
  }
  EXPECT_THROW(deserialize(good + "x"), FormatError);
}

TEST(Checkpoint, GridRoundTripIsFloatExact) {
  Checkpoint c;
  const FeatureGrid g = random_grid(kDims, 3);
  add_grid(c, "g", g);
  const FeatureGrid back = read_grid(deserialize(serialize(c)), "g");
  ASSERT_EQ(back.dims(), g.dims());
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(back[i], static_cast<double>(static_cast<float>(g[i])));
}

TEST(Checkpoint, TinyParamsRoundTrip) {
  const TinyDenoiserParams p = small_params();
  Checkpoint c;
  add_tiny_params(c, p);
  const TinyDenoiserParams q = read_tiny_params(deserialize(serialize(c)));
  EXPECT_EQ(q.dims, p.dims);
  EXPECT_EQ(q.hidden, p.hidden);
  EXPECT_EQ(q.conditions, p.conditions);
  EXPECT_EQ(q.w1, p.w1);
  EXPECT_EQ(q.b1, p.b1);
  EXPECT_EQ(q.w2, p.w2);
  EXPECT_EQ(q.b2, p.b2);
  EXPECT_EQ(q.cond_embed, p.cond_embed);
  EXPECT_EQ(q.data_second_moment, p.data_second_moment);

  // Identical predictions after reload.
  const NoiseSchedule s = default_schedule();
  const TinyDenoiser a(p, s), b(q, s);
  const FeatureGrid x = random_grid(kDims, 4);
  EXPECT_EQ(a.predict_eps(x, Condition::composite({0, 1}), 500), b.predict_eps(x, Condition::composite({0, 1}), 500));
}

TEST(Checkpoint, GaussianModelRoundTrip) {
  const GaussianSourceModel m = half_split_model(kDims, 2.0, 0.5, 0.25);
  Checkpoint c;
  add_gaussian_model(c, m);
  const GaussianSourceModel back = read_gaussian_model(deserialize(serialize(c)));
  ASSERT_EQ(back.labels().size(), 2u);
  EXPECT_EQ(back.composites(), m.composites());
  const NoiseSchedule s = default_schedule();
  const AnalyticDenoiser a(m, s), b(back, s);
  const FeatureGrid x = random_grid(kDims, 5);
  for (const Condition& cond : {Condition::null(), Condition::label(1), Condition::composite({0, 1})}) {
    EXPECT_LT(max_abs_diff(a.predict_eps(x, cond, 300), b.predict_eps(x, cond, 300)), 1e-12);
  }
}

TEST(Checkpoint, TraceRoundTripReconstructsWithinFloatPrecision) {
  const NoiseSchedule s = default_schedule();
  const AnalyticDenoiser d(half_split_model(kDims), s);
  const StepPlan plan = StepPlan::uniform(1000, 20);
  const FeatureGrid x0 = random_grid(kDims, 6, 2.0);
  for (SamplerKind kind : {SamplerKind::ddim, SamplerKind::ddpm}) {
    const InversionTrace tr = kind == SamplerKind::ddim ? ddim_invert(d, s, plan, x0, Condition::label(0))
                                                        : ddpm_invert(d, s, plan, x0, Condition::label(0), 8);
    Checkpoint c;
    add_trace(c, "trace", tr);
    const InversionTrace back = read_trace(deserialize(serialize(c)), "trace");
    EXPECT_EQ(back.kind, tr.kind);
    EXPECT_EQ(back.plan, tr.plan);
    EXPECT_EQ(back.c_inv, tr.c_inv);
    ASSERT_EQ(back.zs.size(), tr.zs.size());
    const GuidanceConfig g{1.0, Condition::label(0)};
    const FeatureGrid direct = reconstruct(d, s, tr, g);
    const FeatureGrid rec = reconstruct(d, s, back, g);
    EXPECT_LT(max_abs_diff(rec, direct), 1e-4) << to_string(kind);
    if (kind == SamplerKind::ddpm) EXPECT_LT(max_abs_diff(rec, x0), 1e-4);
  }
}

TEST(Checkpoint, MissingTraceRecordsThrow) {
  Checkpoint c;
  EXPECT_THROW(read_trace(c, "trace"), FormatError);
  EXPECT_THROW(read_tiny_params(c), FormatError);
  EXPECT_THROW(read_gaussian_model(c), FormatError);
}
