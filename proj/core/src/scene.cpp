#include "zsep/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "zsep/random.hpp"

namespace zsep {

namespace {

void validate(const SourceLabel& l) {
  if (l.id < 0) throw std::invalid_argument("SourceLabel: negative id");
  if (l.fundamental_bin < 1) throw std::invalid_argument("SourceLabel '" + l.name + "': fundamental bin must be >= 1");
  if (l.harmonics < 1) throw std::invalid_argument("SourceLabel '" + l.name + "': need at least one harmonic");
  if (!std::isfinite(l.decay) || l.decay < 0.0) throw std::invalid_argument("SourceLabel '" + l.name + "': bad decay");
  if (!std::isfinite(l.envelope_period) || l.envelope_period <= 0.0) {
    throw std::invalid_argument("SourceLabel '" + l.name + "': envelope period must be positive");
  }
  if (!std::isfinite(l.amplitude) || l.amplitude < 0.0) {
    throw std::invalid_argument("SourceLabel '" + l.name + "': amplitude must be non-negative");
  }
}

}  // namespace

LabelRegistry::LabelRegistry(std::vector<SourceLabel> labels) {
  for (auto& l : labels) add(std::move(l));
}

void LabelRegistry::add(SourceLabel label) {
  validate(label);
  if (contains(label.id)) throw std::invalid_argument("LabelRegistry: duplicate id " + std::to_string(label.id));
  labels_.push_back(std::move(label));
}

const SourceLabel& LabelRegistry::get(int id) const {
  for (const auto& l : labels_) {
    if (l.id == id) return l;
  }
  throw std::out_of_range("LabelRegistry: unknown label id " + std::to_string(id));
}

bool LabelRegistry::contains(int id) const {
  return std::any_of(labels_.begin(), labels_.end(), [id](const SourceLabel& l) { return l.id == id; });
}

LabelRegistry LabelRegistry::default_registry() {
  return LabelRegistry({
      {0, "hum", 3, 4, 0.7, 8.0, 1.0},
      {1, "bell", 4, 3, 0.8, 6.0, 1.0},
      {2, "chirp", 5, 3, 0.6, 12.0, 1.0},
      {3, "whistle", 7, 2, 0.8, 5.0, 1.0},
  });
}

FeatureGrid gen_source(const SourceLabel& label, GridDims dims, std::uint64_t seed,
                       std::vector<std::string>* warnings) {
  validate(label);
  if (!dims.valid()) throw std::invalid_argument("gen_source: dimensions must be positive");
  if (static_cast<std::size_t>(label.fundamental_bin) >= dims.bins) {
    throw std::invalid_argument("gen_source: fundamental bin of '" + label.name + "' not below F");
  }

  Rng rng(seed);
  const double gain = rng.uniform(kGainLow, kGainHigh);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  FeatureGrid g(dims);
  int kept = 0;
  for (int h = 1; h <= label.harmonics; ++h) {
    const auto bin = static_cast<std::size_t>(h * label.fundamental_bin);
    if (bin >= dims.bins) break;
    ++kept;
    const double weight = label.amplitude * gain * std::pow(label.decay, h - 1);
    for (std::size_t c = 0; c < dims.channels; ++c) {
      for (std::size_t t = 0; t < dims.frames; ++t) {
        const double env =
            0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / label.envelope_period + phase));
        g.at(c, t, bin) += weight * env;
      }
    }
  }
  if (kept < label.harmonics && warnings) {
    warnings->push_back("label '" + label.name + "': " + std::to_string(label.harmonics - kept) +
                        " harmonic(s) beyond F=" + std::to_string(dims.bins) + " dropped");
  }

  const double jitter = label.amplitude * kJitterScale;
  for (double& v : g.values()) v += jitter * std::abs(rng.normal());
  return g;
}

double expected_source_energy(const SourceLabel& label, GridDims dims) {
  // E[gain^2] for the uniform gain and E[env(t)^2] = 3/8 for a uniform phase.
  const double mean_gain_sq =
      (kGainHigh * kGainHigh + kGainHigh * kGainLow + kGainLow * kGainLow) / 3.0;
  double harmonic_weight = 0.0;
  for (int h = 1; h <= label.harmonics; ++h) {
    if (static_cast<std::size_t>(h * label.fundamental_bin) >= dims.bins) break;
    harmonic_weight += std::pow(label.decay, 2.0 * (h - 1));
  }
  const double a2 = label.amplitude * label.amplitude;
  const double cells = static_cast<double>(dims.size());
  const double lines = static_cast<double>(dims.channels * dims.frames);
  // Cross term between the harmonic line and its jitter: 2 * E[w env] * s * E|n|.
  const double mean_gain = 0.5 * (kGainLow + kGainHigh);
  double harmonic_mean = 0.0;
  for (int h = 1; h <= label.harmonics; ++h) {
    if (static_cast<std::size_t>(h * label.fundamental_bin) >= dims.bins) break;
    harmonic_mean += std::pow(label.decay, h - 1);
  }
  const double abs_normal_mean = std::sqrt(2.0 / std::numbers::pi);
  return a2 * (mean_gain_sq * 0.375 * lines * harmonic_weight +
               2.0 * mean_gain * 0.5 * lines * harmonic_mean * kJitterScale * abs_normal_mean +
               kJitterScale * kJitterScale * cells);
}

FeatureGrid mix(const std::vector<FeatureGrid>& sources) {
  if (sources.empty()) throw std::invalid_argument("mix: empty source list");
  FeatureGrid out = sources.front();
  for (std::size_t k = 1; k < sources.size(); ++k) {
    require_same_dims(out, sources[k], "mix");
    out += sources[k];
  }
  return out;
}

std::vector<LabeledGrid> make_dataset(const std::vector<SourceLabel>& labels, int n_per_label,
                                      bool include_pairs, GridDims dims, std::uint64_t seed) {
  if (labels.empty()) throw std::invalid_argument("make_dataset: empty label list");
  if (n_per_label < 1) throw std::invalid_argument("make_dataset: n_per_label must be >= 1");

  std::vector<LabeledGrid> out;
  std::uint64_t sample = 0;
  for (const auto& l : labels) {
    for (int n = 0; n < n_per_label; ++n) {
      out.push_back({Condition::label(l.id), gen_source(l, dims, derive_seed(seed, sample++))});
    }
  }
  if (include_pairs) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t j = i + 1; j < labels.size(); ++j) {
        for (int n = 0; n < n_per_label; ++n) {
          const std::uint64_t s = derive_seed(seed, sample++);
          FeatureGrid g = gen_source(labels[i], dims, derive_seed(s, 0));
          g += gen_source(labels[j], dims, derive_seed(s, 1));
          out.push_back({Condition::composite({labels[i].id, labels[j].id}), std::move(g)});
        }
      }
    }
  }
  return out;
}

FeatureGrid SyntheticScene::source_sum(const std::vector<int>& label_ids) const {
  FeatureGrid out(mixture.dims());
  bool any = false;
  for (const auto& s : sources) {
    if (std::find(label_ids.begin(), label_ids.end(), s.label.id) != label_ids.end()) {
      out += s.grid;
      any = true;
    }
  }
  if (!any) throw std::invalid_argument("SyntheticScene: no source with the requested labels");
  return out;
}

SyntheticScene make_scene(const LabelRegistry& registry, const std::vector<int>& label_ids, GridDims dims,
                          std::uint64_t seed, const std::vector<double>& gains) {
  if (label_ids.empty()) throw std::invalid_argument("make_scene: no labels");
  if (!gains.empty() && gains.size() != label_ids.size()) {
    throw std::invalid_argument("make_scene: one gain per source required");
  }
  SyntheticScene scene;
  scene.seed = seed;
  std::vector<FeatureGrid> grids;
  for (std::size_t k = 0; k < label_ids.size(); ++k) {
    const SourceLabel& l = registry.get(label_ids[k]);
    FeatureGrid g = gen_source(l, dims, derive_seed(seed, k), &scene.warnings);
    if (!gains.empty()) g *= gains[k];
    grids.push_back(g);
    scene.sources.push_back({l, std::move(g)});
  }
  scene.mixture = mix(grids);
  return scene;
}

std::vector<SyntheticScene> make_two_source_scenes(const LabelRegistry& registry, int count, GridDims dims,
                                                   std::uint64_t seed) {
  if (registry.size() < 2) throw std::invalid_argument("make_two_source_scenes: need at least two labels");
  if (count < 0) throw std::invalid_argument("make_two_source_scenes: negative count");
  std::vector<SyntheticScene> scenes;
  scenes.reserve(static_cast<std::size_t>(count));
  const auto n = static_cast<std::uint64_t>(registry.size());
  for (int k = 0; k < count; ++k) {
    const std::uint64_t scene_seed = derive_seed(seed, static_cast<std::uint64_t>(k));
    Rng pick(derive_seed(scene_seed, 0xC0FFEE));
    const auto a = pick.below(n);
    auto b = pick.below(n - 1);
    if (b >= a) ++b;
    const int ia = registry.labels()[a].id;
    const int ib = registry.labels()[b].id;
    SyntheticScene s = make_scene(registry, {ia, ib}, dims, scene_seed);
    s.id = static_cast<std::uint64_t>(k);
    scenes.push_back(std::move(s));
  }
  return scenes;
}

}  // namespace zsep
