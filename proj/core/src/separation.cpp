#include "zsep/separation.hpp"

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <stdexcept>
#include <thread>

#include "zsep/metrics.hpp"
#include "zsep/random.hpp"

namespace zsep {

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  for (std::size_t k = 0; k < count; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

FeatureGrid target_truth(const SyntheticScene& scene, const Condition& target) {
  if (target.is_null()) return scene.mixture;
  if (target.kind() == Condition::Kind::random) throw std::invalid_argument("no ground truth for a random prompt");
  const auto ids = target.ids();
  return scene.source_sum(std::vector<int>(ids.begin(), ids.end()));
}

namespace {

InversionTrace invert(const Denoiser& model, const NoiseSchedule& sched, const SeparationRequest& req,
                      std::uint64_t seed) {
  if (req.kind == SamplerKind::ddim) {
    return ddim_invert(model, sched, req.plan, req.mixture, req.c_inv, req.inversion_refine);
  }
  return ddpm_invert(model, sched, req.plan, req.mixture, req.c_inv, seed);
}

}  // namespace

SeparationResult separate(const Denoiser& model, const NoiseSchedule& sched, const SeparationRequest& req,
                          const SyntheticScene* truth) {
  if (req.targets.empty()) throw std::invalid_argument("separate: no targets");
  if (!std::isfinite(req.omega) || req.omega < 0.0) throw std::invalid_argument("separate: omega must be >= 0");
  if (req.mixture.dims() != model.dims()) throw std::invalid_argument("separate: mixture dims differ from the model");
  if (!model.supports(req.c_inv)) throw std::invalid_argument("separate: unsupported c_inv " + req.c_inv.to_string());
  for (const auto& t : req.targets) {
    if (!model.supports(t)) throw std::invalid_argument("separate: unknown target " + t.to_string());
  }

  SeparationResult res;
  InversionTrace shared = invert(model, sched, req, req.seed);
  res.trace_id = shared.id();
  for (std::size_t k = 0; k < req.targets.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    const Condition& target = req.targets[k];
    const GuidanceConfig g{req.omega, target};
    FeatureGrid out;
    if (req.reinvert_per_target) {
      const InversionTrace own = invert(model, sched, req, derive_seed(req.seed, k + 1));
      out = reconstruct(model, sched, own, g, req.plan);
    } else if (req.resample_noise && req.kind == SamplerKind::ddpm) {
      out = generate(model, sched, req.plan, shared.x_T, g, req.kind, {}, derive_seed(req.seed, 0x100 + k));
    } else {
      out = reconstruct(model, sched, shared, g, req.plan);
    }
    TargetDiagnostics diag;
    diag.target = target;
    if (truth && target.kind() != Condition::Kind::random) {
      const FeatureGrid ref = target_truth(*truth, target);
      diag.si_sdr_db = si_sdr(out, ref);
      diag.spectral_l1 = spectral_l1(out, ref);
    }
    diag.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    res.outputs.push_back(std::move(out));
    res.diagnostics.push_back(std::move(diag));
  }
  return res;
}

SweepTable sweep_omega(const Denoiser& model, const NoiseSchedule& sched, const std::vector<SyntheticScene>& scenes,
                       const std::vector<double>& omegas, const ExperimentSettings& settings, int jobs) {
  if (scenes.empty()) throw std::invalid_argument("sweep_omega: no scenes");
  if (omegas.empty()) throw std::invalid_argument("sweep_omega: no omegas");
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (omegas[i] == omegas[j]) throw std::invalid_argument("sweep_omega: duplicate omega");
    }
  }

  struct SceneOut {
    std::vector<MetricRow> rows;
    std::vector<FeatureGrid> outputs;  // parallel to rows
    std::vector<FeatureGrid> truths;
  };
  std::vector<SceneOut> per_scene(scenes.size());

  parallel_for(scenes.size(), jobs, [&](std::size_t s) {
    const SyntheticScene& scene = scenes[s];
    SeparationRequest req;
    req.mixture = scene.mixture;
    req.c_inv = settings.c_inv;
    req.kind = settings.kind;
    req.plan = settings.plan;
    req.seed = derive_seed(settings.seed, scene.id);
    req.inversion_refine = settings.inversion_refine;
    for (const auto& src : scene.sources) req.targets.push_back(Condition::label(src.label.id));

    const InversionTrace trace = req.kind == SamplerKind::ddim
                                     ? ddim_invert(model, sched, req.plan, req.mixture, req.c_inv, req.inversion_refine)
                                     : ddpm_invert(model, sched, req.plan, req.mixture, req.c_inv, req.seed);
    SceneOut& out = per_scene[s];
    for (double omega : omegas) {
      for (const auto& target : req.targets) {
        FeatureGrid est = reconstruct(model, sched, trace, GuidanceConfig{omega, target}, req.plan);
        FeatureGrid ref = target_truth(scene, target);
        MetricRow row;
        row.scene_id = scene.id;
        row.seed = req.seed;
        row.target_label = target.to_string();
        row.omega = omega;
        row.sampler = req.kind;
        row.steps = static_cast<int>(req.plan.size());
        row.si_sdr_db = si_sdr(est, ref);
        row.spectral_l1 = spectral_l1(est, ref);
        row.si_sdr_vs_mixture_db = si_sdr(est, scene.mixture);
        out.rows.push_back(std::move(row));
        out.outputs.push_back(std::move(est));
        out.truths.push_back(std::move(ref));
      }
    }
  });

  SweepTable table;
  std::map<double, std::vector<std::size_t>> by_omega;
  std::vector<FeatureGrid> outputs;
  std::vector<FeatureGrid> truths;
  for (auto& so : per_scene) {
    for (std::size_t k = 0; k < so.rows.size(); ++k) {
      by_omega[so.rows[k].omega].push_back(table.rows.size());
      table.rows.push_back(std::move(so.rows[k]));
      outputs.push_back(std::move(so.outputs[k]));
      truths.push_back(std::move(so.truths[k]));
    }
  }
  for (double omega : omegas) {
    const auto& idx = by_omega.at(omega);
    std::vector<double> sdr, l1;
    std::vector<FeatureGrid> est_set, ref_set;
    for (std::size_t i : idx) {
      sdr.push_back(table.rows[i].si_sdr_db);
      l1.push_back(table.rows[i].spectral_l1);
      est_set.push_back(outputs[i]);
      ref_set.push_back(truths[i]);
    }
    OmegaSummary sm;
    sm.omega = omega;
    sm.mean_si_sdr_db = mean(sdr);
    sm.median_si_sdr_db = median(sdr);
    sm.mean_spectral_l1 = mean(l1);
    sm.desk_fad = desk_fad(est_set, ref_set);
    for (std::size_t i : idx) table.rows[i].desk_fad = sm.desk_fad;
    table.summary.push_back(sm);
  }
  return table;
}

AblationTable ablate_prompts(const Denoiser& model, const NoiseSchedule& sched,
                             const std::vector<SyntheticScene>& scenes, const ExperimentSettings& settings,
                             int jobs) {
  if (scenes.empty()) throw std::invalid_argument("ablate_prompts: no scenes");
  for (const auto& s : scenes) {
    if (s.sources.size() < 2) throw std::invalid_argument("ablate_prompts: scene " + std::to_string(s.id) +
                                                          " has fewer than two sources");
  }
  std::vector<std::array<AblationRow, 3>> per_scene(scenes.size());
  parallel_for(scenes.size(), jobs, [&](std::size_t s) {
    const SyntheticScene& scene = scenes[s];
    const Condition ci = Condition::label(scene.sources[0].label.id);
    const Condition cj = Condition::label(scene.sources[1].label.id);
    const Condition rnd = Condition::random(derive_seed(scene.seed, 0x5EED));
    const FeatureGrid ref = target_truth(scene, ci);
    const std::uint64_t seed = derive_seed(settings.seed, scene.id);
    const std::array<std::pair<Condition, Condition>, 3> configs{
        std::pair{Condition::null(), ci}, std::pair{Condition::null(), rnd}, std::pair{cj, ci}};
    const std::array<const char*, 3> names{kAblationBaseline, kAblationRandom, kAblationOtherInv};
    for (std::size_t k = 0; k < 3; ++k) {
      SeparationRequest req;
      req.mixture = scene.mixture;
      req.c_inv = configs[k].first;
      req.targets = {configs[k].second};
      req.kind = settings.kind;
      req.plan = settings.plan;
      req.seed = seed;
      req.inversion_refine = settings.inversion_refine;
      const SeparationResult r = separate(model, sched, req);
      AblationRow& row = per_scene[s][k];
      row.scene_id = scene.id;
      row.seed = seed;
      row.config = names[k];
      row.c_inv = configs[k].first.to_string();
      row.c_rev = configs[k].second.to_string();
      row.si_sdr_db = si_sdr(r.outputs[0], ref);
      row.spectral_l1 = spectral_l1(r.outputs[0], ref);
    }
    for (auto& row : per_scene[s]) {
      row.delta_si_sdr_db = row.si_sdr_db - per_scene[s][0].si_sdr_db;
      row.delta_spectral_l1 = row.spectral_l1 - per_scene[s][0].spectral_l1;
    }
  });

  AblationTable table;
  for (const auto& rows : per_scene) table.rows.insert(table.rows.end(), rows.begin(), rows.end());
  for (const char* name : {kAblationBaseline, kAblationRandom, kAblationOtherInv}) {
    std::vector<double> sdr, delta, l1;
    for (const auto& r : table.rows) {
      if (r.config != name) continue;
      sdr.push_back(r.si_sdr_db);
      delta.push_back(r.delta_si_sdr_db);
      l1.push_back(r.spectral_l1);
    }
    table.summary.push_back({name, median(sdr), median(delta), mean(l1)});
  }
  return table;
}

}  // namespace zsep
