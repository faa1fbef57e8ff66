#include "zsep/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "zsep/checkpoint.hpp"
#include "zsep/error.hpp"
#include "zsep/random.hpp"
#include "zsep/report_io.hpp"

namespace zsep {

namespace fs = std::filesystem;

std::vector<LabeledGrid> training_data(const ExperimentConfig& cfg) {
  return make_dataset(cfg.labels, cfg.dataset.n_per_label, cfg.dataset.include_pairs, cfg.dataset.dims,
                      derive_seed(cfg.seed, stream::kTrainData));
}

std::vector<SyntheticScene> evaluation_scenes(const ExperimentConfig& cfg) {
  return make_two_source_scenes(registry_of(cfg), cfg.scenes, cfg.dataset.dims, derive_seed(cfg.seed, stream::kScenes));
}

ExperimentSettings settings_of(const ExperimentConfig& cfg) {
  ExperimentSettings s;
  s.kind = cfg.sampler;
  s.plan = StepPlan::uniform(cfg.schedule.steps, cfg.steps);
  s.c_inv = cfg.c_inv;
  s.seed = derive_seed(cfg.seed, stream::kSeparation);
  s.inversion_refine = cfg.inversion_refine;
  return s;
}

namespace {

LoadedModel wrap_tiny(TinyDenoiserParams p, NoiseSchedule sched, std::vector<double> curve) {
  LoadedModel m{sched, nullptr, p, std::nullopt, std::move(curve)};
  m.model = std::make_unique<TinyDenoiser>(std::move(p), std::move(sched));
  return m;
}

LoadedModel wrap_gaussian(GaussianSourceModel g, NoiseSchedule sched) {
  LoadedModel m{sched, nullptr, std::nullopt, g, {}};
  m.model = std::make_unique<AnalyticDenoiser>(std::move(g), std::move(sched));
  return m;
}

TinyDenoiserParams train_tiny(const ExperimentConfig& cfg, const std::vector<LabeledGrid>& data,
                              const NoiseSchedule& sched, std::uint64_t seed, std::vector<double>* curve) {
  TinyDenoiserParams init = init_tiny_params(cfg.denoiser.tiny, cfg.dataset.dims, default_conditions(registry_of(cfg)),
                                             second_moment(data), derive_seed(seed, stream::kInit));
  TrainOptions opt;
  opt.epochs = cfg.denoiser.epochs;
  opt.learning_rate = cfg.denoiser.learning_rate;
  opt.batch_size = cfg.denoiser.batch_size;
  opt.seed = derive_seed(seed, stream::kTrain);
  TrainResult r = train(std::move(init), data, sched, opt);
  quantize_to_float(r.params);
  if (curve) *curve = std::move(r.loss_curve);
  return std::move(r.params);
}

void ensure_dir(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + out.string() + ": " + ec.message());
}

}  // namespace

LoadedModel build_model(const ExperimentConfig& cfg) {
  NoiseSchedule sched = make_schedule(cfg.schedule);
  const auto data = training_data(cfg);
  if (cfg.denoiser.kind == DenoiserKind::analytic) {
    spdlog::info("fitting analytic model on {} samples", data.size());
    return wrap_gaussian(GaussianSourceModel::fit(data, cfg.denoiser.min_std), std::move(sched));
  }
  spdlog::info("training tiny denoiser: hidden={} epochs={} samples={}", cfg.denoiser.tiny.hidden,
               cfg.denoiser.epochs, data.size());
  std::vector<double> curve;
  TinyDenoiserParams p = train_tiny(cfg, data, sched, cfg.seed, &curve);
  if (!curve.empty()) spdlog::info("final training loss {:.6f}", curve.back());
  return wrap_tiny(std::move(p), std::move(sched), std::move(curve));
}

LoadedModel load_or_build_model(const ExperimentConfig& cfg) {
  if (cfg.checkpoint.empty()) return build_model(cfg);
  spdlog::info("loading model from {}", cfg.checkpoint);
  const Checkpoint ck = read_checkpoint(cfg.checkpoint);
  NoiseSchedule sched = make_schedule(cfg.schedule);
  if (ck.find("tiny/meta")) {
    TinyDenoiserParams p = read_tiny_params(ck);
    if (p.dims != cfg.dataset.dims) throw ConfigError("checkpoint dims differ from dataset.dims");
    return wrap_tiny(std::move(p), std::move(sched), {});
  }
  if (ck.find("gauss/labels")) return wrap_gaussian(read_gaussian_model(ck), std::move(sched));
  throw FormatError("checkpoint " + cfg.checkpoint + " holds no model");
}

Checkpoint model_checkpoint(const LoadedModel& m) {
  Checkpoint ck;
  if (m.tiny) add_tiny_params(ck, *m.tiny);
  if (m.gaussian) add_gaussian_model(ck, *m.gaussian);
  return ck;
}

TrainSummary cmd_train(const ExperimentConfig& cfg, const fs::path& out) {
  ensure_dir(out);
  const LoadedModel m = build_model(cfg);
  TrainSummary s{out / "model.zsep", out / "loss.csv", m.loss_curve};
  write_checkpoint(s.checkpoint, model_checkpoint(m));
  CsvTable loss({"epoch", "loss"});
  for (std::size_t e = 0; e < m.loss_curve.size(); ++e) {
    if (!std::isfinite(m.loss_curve[e])) throw NumericalError("non-finite loss at epoch " + std::to_string(e));
    loss.add_row({std::to_string(e), format_number(m.loss_curve[e])});
  }
  loss.write(s.loss_csv);
  return s;
}

namespace {

const std::vector<std::string> kMetricHeader{"scene_id", "seed", "target_label", "omega", "sampler",
                                             "steps", "si_sdr_db", "spectral_l1", "desk_fad"};

std::vector<std::string> metric_cells(const MetricRow& r) {
  return {std::to_string(r.scene_id), std::to_string(r.seed),     r.target_label,
          format_number(r.omega),     to_string(r.sampler),       std::to_string(r.steps),
          format_number(r.si_sdr_db), format_number(r.spectral_l1), format_number(r.desk_fad)};
}

}  // namespace

SeparateSummary cmd_separate(const ExperimentConfig& cfg, const fs::path& out) {
  ensure_dir(out);
  const LoadedModel m = load_or_build_model(cfg);
  const ExperimentSettings st = settings_of(cfg);

  std::optional<SyntheticScene> scene;
  SeparationRequest req;
  if (!cfg.mixture.empty()) {
    req.mixture = read_grid(read_checkpoint(cfg.mixture), "mixture");
  } else {
    scene = make_two_source_scenes(registry_of(cfg), 1, cfg.dataset.dims, derive_seed(cfg.seed, stream::kScenes))[0];
    req.mixture = scene->mixture;
  }
  if (cfg.targets.empty()) {
    if (!scene) throw ConfigError("separate: targets are required with an external mixture");
    for (const auto& s : scene->sources) req.targets.push_back(Condition::label(s.label.id));
  } else {
    for (const auto& t : cfg.targets) req.targets.push_back(Condition::parse(t));
  }
  req.c_inv = cfg.c_inv;
  req.omega = cfg.omega;
  req.kind = st.kind;
  req.plan = st.plan;
  req.seed = derive_seed(st.seed, scene ? scene->id : 0);
  req.inversion_refine = cfg.inversion_refine;
  for (const auto& t : req.targets) {
    if (!m.model->supports(t)) throw ConfigError("separate: model does not know target " + t.to_string());
  }
  if (!m.model->supports(req.c_inv)) throw ConfigError("separate: model does not know c_inv " + req.c_inv.to_string());

  SeparateSummary s{out / "separated.zsep", out / "separation.csv", separate(*m.model, m.sched, req, scene ? &*scene : nullptr),
                    req.mixture};
  Checkpoint ck;
  add_grid(ck, "mixture", req.mixture);
  for (std::size_t k = 0; k < s.result.outputs.size(); ++k) {
    add_grid(ck, "target/" + std::to_string(k) + "/" + req.targets[k].to_string(), s.result.outputs[k]);
  }
  write_checkpoint(s.grids, ck);

  CsvTable csv(kMetricHeader);
  for (std::size_t k = 0; k < s.result.outputs.size(); ++k) {
    const auto& d = s.result.diagnostics[k];
    MetricRow row;
    row.scene_id = scene ? scene->id : 0;
    row.seed = req.seed;
    row.target_label = d.target.to_string();
    row.omega = req.omega;
    row.sampler = req.kind;
    row.steps = static_cast<int>(req.plan.size());
    row.si_sdr_db = d.si_sdr_db.value_or(std::nan(""));
    row.spectral_l1 = d.spectral_l1.value_or(std::nan(""));
    row.desk_fad = std::nan("");
    csv.add_row(metric_cells(row));
    spdlog::info("target {}: si_sdr {} dB, {:.1f} ms", row.target_label, format_number(row.si_sdr_db), d.runtime_ms);
  }
  csv.write(s.csv);
  return s;
}

bool omega_peak_holds(const std::vector<OmegaSummary>& summary) {
  auto find = [&](double w) -> std::optional<double> {
    for (const auto& s : summary) {
      if (s.omega == w) return s.median_si_sdr_db;
    }
    return std::nullopt;
  };
  const auto m0 = find(0.0), m05 = find(0.5), m1 = find(1.0), m2 = find(2.0);
  if (!m0 || !m05 || !m1 || !m2) return false;
  return *m1 > *m05 && *m05 > *m0 && *m2 < *m1;
}

SweepSummary cmd_sweep_omega(const ExperimentConfig& cfg, const fs::path& out) {
  ensure_dir(out);
  const LoadedModel m = load_or_build_model(cfg);
  SweepSummary s;
  s.table = sweep_omega(*m.model, m.sched, evaluation_scenes(cfg), cfg.omegas, settings_of(cfg), cfg.jobs);
  s.peak_at_one = omega_peak_holds(s.table.summary);

  CsvTable rows(kMetricHeader);
  for (const auto& r : s.table.rows) rows.add_row(metric_cells(r));
  rows.write(out / "sweep_omega.csv");
  CsvTable summary({"omega", "mean_si_sdr_db", "median_si_sdr_db", "mean_spectral_l1", "desk_fad"});
  PlotSeries med{"median SI-SDR (dB)", {}, {}}, l1{"mean spectral L1", {}, {}}, fad{"desk-FAD", {}, {}};
  for (const auto& o : s.table.summary) {
    summary.add_row({format_number(o.omega), format_number(o.mean_si_sdr_db), format_number(o.median_si_sdr_db),
                     format_number(o.mean_spectral_l1), format_number(o.desk_fad)});
    for (auto* p : {&med, &l1, &fad}) p->xs.push_back(o.omega);
    med.ys.push_back(o.median_si_sdr_db);
    l1.ys.push_back(o.mean_spectral_l1);
    fad.ys.push_back(o.desk_fad);
    spdlog::info("omega {}: median si_sdr {:.3f} dB", format_number(o.omega), o.median_si_sdr_db);
  }
  summary.write(out / "sweep_omega_summary.csv");
  write_text(out / "sweep_omega.svg", line_plot_svg("separation vs guidance weight", "omega", {med, l1, fad}));
  return s;
}

AblationTable cmd_ablate_prompts(const ExperimentConfig& cfg, const fs::path& out) {
  ensure_dir(out);
  const LoadedModel m = load_or_build_model(cfg);
  AblationTable t = ablate_prompts(*m.model, m.sched, evaluation_scenes(cfg), settings_of(cfg), cfg.jobs);
  CsvTable rows({"scene_id", "seed", "config", "c_inv", "c_rev", "si_sdr_db", "spectral_l1", "delta_si_sdr_db",
                 "delta_spectral_l1"});
  for (const auto& r : t.rows) {
    rows.add_row({std::to_string(r.scene_id), std::to_string(r.seed), r.config, r.c_inv, r.c_rev,
                  format_number(r.si_sdr_db), format_number(r.spectral_l1), format_number(r.delta_si_sdr_db),
                  format_number(r.delta_spectral_l1)});
  }
  rows.write(out / "ablate_prompts.csv");
  CsvTable summary({"config", "median_si_sdr_db", "median_delta_si_sdr_db", "mean_spectral_l1"});
  for (const auto& s : t.summary) {
    summary.add_row({s.config, format_number(s.median_si_sdr_db), format_number(s.median_delta_si_sdr_db),
                     format_number(s.mean_spectral_l1)});
  }
  summary.write(out / "ablate_prompts_summary.csv");
  return t;
}

RoundtripSummary roundtrip_study(const Denoiser& model, const NoiseSchedule& sched,
                                 const std::vector<SyntheticScene>& scenes, const std::vector<int>& steps,
                                 const Condition& c_inv, int refine, std::uint64_t seed, int jobs) {
  if (scenes.empty()) throw std::invalid_argument("roundtrip: no scenes");
  if (steps.empty()) throw std::invalid_argument("roundtrip: no step counts");
  std::vector<std::vector<RoundtripRow>> per_scene(scenes.size());
  parallel_for(scenes.size(), jobs, [&](std::size_t s) {
    const FeatureGrid& x0 = scenes[s].mixture;
    const double norm = std::sqrt(squared_norm(x0));
    const GuidanceConfig g{1.0, c_inv};
    for (SamplerKind kind : {SamplerKind::ddim, SamplerKind::ddpm}) {
      for (int k : steps) {
        const StepPlan plan = StepPlan::uniform(sched.steps(), k);
        const InversionTrace tr = kind == SamplerKind::ddim
                                      ? ddim_invert(model, sched, plan, x0, c_inv, refine)
                                      : ddpm_invert(model, sched, plan, x0, c_inv, derive_seed(seed, scenes[s].id));
        const FeatureGrid rec = reconstruct(model, sched, tr, g, plan);
        const FeatureGrid diff = rec - x0;
        per_scene[s].push_back({scenes[s].id, kind, k, max_abs_diff(rec, x0),
                                norm > 0.0 ? std::sqrt(squared_norm(diff)) / norm : std::sqrt(squared_norm(diff))});
      }
    }
  });
  RoundtripSummary out;
  for (auto& rows : per_scene) out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  for (int k : steps) {
    std::vector<double> e;
    for (const auto& r : out.rows) {
      if (r.sampler == SamplerKind::ddim && r.steps == k) e.push_back(r.relative_l2_error);
    }
    out.ddim_median_error.push_back(median(e));
  }
  for (const auto& r : out.rows) {
    if (r.sampler == SamplerKind::ddpm) out.ddpm_max_abs_error = std::max(out.ddpm_max_abs_error, r.max_abs_error);
  }
  return out;
}

RoundtripSummary cmd_roundtrip(const ExperimentConfig& cfg, const fs::path& out) {
  ensure_dir(out);
  const LoadedModel m = load_or_build_model(cfg);
  const RoundtripSummary s = roundtrip_study(*m.model, m.sched, evaluation_scenes(cfg), cfg.roundtrip_steps, cfg.c_inv,
                                             cfg.inversion_refine, derive_seed(cfg.seed, stream::kSeparation), cfg.jobs);
  CsvTable rows({"scene_id", "sampler", "steps", "max_abs_error", "relative_l2_error"});
  for (const auto& r : s.rows) {
    rows.add_row({std::to_string(r.scene_id), to_string(r.sampler), std::to_string(r.steps),
                  format_number(r.max_abs_error), format_number(r.relative_l2_error)});
  }
  rows.write(out / "roundtrip.csv");
  CsvTable summary({"steps", "ddim_median_relative_error"});
  for (std::size_t k = 0; k < cfg.roundtrip_steps.size(); ++k) {
    summary.add_row({std::to_string(cfg.roundtrip_steps[k]), format_number(s.ddim_median_error[k])});
  }
  summary.write(out / "roundtrip_summary.csv");
  spdlog::info("ddpm max abs round-trip error {}", format_number(s.ddpm_max_abs_error));
  return s;
}

CapacitySummary cmd_capacity_sweep(const ExperimentConfig& cfg, const fs::path& out) {
  ensure_dir(out);
  if (cfg.denoiser.kind != DenoiserKind::tiny) throw ConfigError("capacity-sweep needs denoiser.kind = tiny");
  const NoiseSchedule sched = make_schedule(cfg.schedule);
  const auto data = training_data(cfg);
  const auto held_out = make_dataset(cfg.labels, std::max(8, cfg.dataset.n_per_label / 4), cfg.dataset.include_pairs,
                                     cfg.dataset.dims, derive_seed(cfg.seed, stream::kEvalData));
  const auto scenes = evaluation_scenes(cfg);
  const ExperimentSettings st = settings_of(cfg);

  struct Job {
    int hidden;
    int replicate;
  };
  std::vector<Job> jobs;
  for (int h : cfg.widths) {
    for (int r = 0; r < cfg.seeds; ++r) jobs.push_back({h, r});
  }
  CapacitySummary s;
  s.rows.resize(jobs.size());
  parallel_for(jobs.size(), cfg.jobs, [&](std::size_t i) {
    ExperimentConfig c = cfg;
    c.denoiser.tiny.hidden = jobs[i].hidden;
    const std::uint64_t seed = derive_seed(derive_seed(cfg.seed, stream::kCapacity), static_cast<std::uint64_t>(jobs[i].replicate));
    std::vector<double> curve;
    TinyDenoiserParams p = train_tiny(c, data, sched, seed, &curve);
    CapacityRow& row = s.rows[i];
    row.hidden = jobs[i].hidden;
    row.replicate = jobs[i].replicate;
    row.seed = seed;
    row.final_train_loss = curve.empty() ? std::nan("") : curve.back();
    row.eval_loss = evaluation_loss(p, sched, held_out, derive_seed(cfg.seed, stream::kEvalNoise));
    const TinyDenoiser model(std::move(p), sched);
    const SweepTable t = sweep_omega(model, sched, scenes, {cfg.omega}, st, 1);
    row.median_si_sdr_db = t.summary.front().median_si_sdr_db;
    spdlog::info("hidden {} replicate {}: eval loss {:.5f}, median si_sdr {:.3f} dB", row.hidden, row.replicate,
                 row.eval_loss, row.median_si_sdr_db);
  });
  std::vector<double> quality, sdr;
  for (const auto& r : s.rows) {
    quality.push_back(-r.eval_loss);
    sdr.push_back(r.median_si_sdr_db);
  }
  s.rank_correlation = s.rows.size() >= 2 ? spearman(quality, sdr) : 0.0;

  CsvTable csv({"hidden", "replicate", "seed", "final_train_loss", "eval_loss", "median_si_sdr_db"});
  for (const auto& r : s.rows) {
    csv.add_row({std::to_string(r.hidden), std::to_string(r.replicate), std::to_string(r.seed),
                 format_number(r.final_train_loss), format_number(r.eval_loss), format_number(r.median_si_sdr_db)});
  }
  csv.write(out / "capacity_sweep.csv");
  CsvTable summary({"rank_correlation"});
  summary.add_row({format_number(s.rank_correlation)});
  summary.write(out / "capacity_sweep_summary.csv");
  return s;
}

MetricGapReport cmd_report(const ExperimentConfig& cfg, const fs::path& out) {
  ensure_dir(out);
  const LoadedModel m = load_or_build_model(cfg);
  const MetricGapReport rep = metric_gap_demo(*m.model, m.sched, evaluation_scenes(cfg), cfg.steps);
  CsvTable csv({"scene_id", "method", "si_sdr_db", "spectral_l1", "desk_fad"});
  for (const auto& r : rep.rows) {
    csv.add_row({std::to_string(r.scene_id), r.method, format_number(r.si_sdr_db), format_number(r.spectral_l1),
                  format_number(r.desk_fad)});
  }
  csv.write(out / "metric_gap.csv");

  std::ostringstream md;
  md << "# zsep report\n\n";
  md << "| method | median SI-SDR vs mixture (dB) | desk-FAD vs mixtures |\n|---|---|---|\n";
  md << "| identity | " << format_number(rep.identity_median_si_sdr) << " | " << format_number(rep.identity_fad) << " |\n";
  md << "| ddim round trip (" << cfg.steps << " steps) | " << format_number(rep.roundtrip_median_si_sdr) << " | "
     << format_number(rep.roundtrip_fad) << " |\n";
  for (const char* name : {"sweep_omega_summary.csv", "ablate_prompts_summary.csv", "roundtrip_summary.csv",
                           "capacity_sweep_summary.csv"}) {
    const fs::path p = out / name;
    if (!fs::exists(p)) continue;
    const CsvTable t = read_csv(p);
    md << "\n## " << name << "\n\n|";
    for (const auto& h : t.header()) md << ' ' << h << " |";
    md << "\n|";
    for (std::size_t i = 0; i < t.header().size(); ++i) md << "---|";
    md << '\n';
    for (const auto& r : t.data()) {
      md << '|';
      for (const auto& c : r) md << ' ' << c << " |";
      md << '\n';
    }
  }
  write_text(out / "report.md", md.str());
  return rep;
}

}  // namespace zsep
