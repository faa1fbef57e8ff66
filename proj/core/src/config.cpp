#include "zsep/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "zsep/error.hpp"

namespace zsep {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

GridDims parse_dims(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(where + ": expected [channels, frames, bins]");
  GridDims d;
  try {
    const auto v = j.get<std::vector<long long>>();
    for (auto x : v) require(x > 0 && x <= 1 << 20, where + ": dims must be positive");
    d = GridDims{static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]), static_cast<std::size_t>(v[2])};
  } catch (const json::exception&) {
    throw ConfigError(where + ": dims must be integers");
  }
  return d;
}

}  // namespace

void validate_config(const ExperimentConfig& c) {
  const auto& s = c.schedule;
  require(s.steps >= 1, "schedule.steps must be >= 1");
  if (s.kind == ScheduleKind::linear) {
    require(s.beta_start > 0.0 && s.beta_start <= s.beta_end && s.beta_end < 1.0,
            "schedule: need 0 < beta_start <= beta_end < 1");
  } else {
    require(s.offset > 0.0 && std::isfinite(s.offset), "schedule.offset must be > 0");
  }
  require(!c.labels.empty(), "labels: need at least one label");
  try {
    LabelRegistry reg(c.labels);
    for (const auto& l : reg.labels()) {
      require(static_cast<std::size_t>(l.fundamental_bin) < c.dataset.dims.bins,
              "labels: fundamental bin of '" + l.name + "' must be below the bin count");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("labels: ") + e.what());
  }
  require(c.dataset.dims.valid(), "dataset.dims must be positive");
  require(c.dataset.n_per_label >= 1, "dataset.n_per_label must be >= 1");
  const auto& t = c.denoiser.tiny;
  require(t.hidden >= 1, "denoiser.hidden must be >= 1");
  require(t.time_dim >= 2 && t.time_dim % 2 == 0, "denoiser.time_dim must be even and >= 2");
  require(t.cond_dim >= 1, "denoiser.cond_dim must be >= 1");
  require(t.uncond_dropout >= 0.0 && t.uncond_dropout <= 1.0, "denoiser.dropout must lie in [0, 1]");
  require(c.denoiser.epochs >= 0, "denoiser.epochs must be >= 0");
  require(c.denoiser.learning_rate >= 0.0 && std::isfinite(c.denoiser.learning_rate), "denoiser.lr must be >= 0");
  require(c.denoiser.batch_size >= 1, "denoiser.batch must be >= 1");
  require(c.denoiser.min_std > 0.0, "denoiser.min_std must be > 0");
  require(c.steps >= 1 && c.steps <= s.steps, "steps must lie in [1, schedule.steps]");
  require(std::isfinite(c.omega) && c.omega >= 0.0, "guidance.omega must be finite and >= 0");
  require(!c.omegas.empty(), "omegas must not be empty");
  for (double w : c.omegas) require(std::isfinite(w) && w >= 0.0, "omegas must be finite and >= 0");
  require(c.scenes >= 1, "scenes must be >= 1");
  require(!c.widths.empty(), "widths must not be empty");
  for (int w : c.widths) require(w >= 1, "widths must be >= 1");
  require(c.seeds >= 1, "seeds must be >= 1");
  require(!c.roundtrip_steps.empty(), "roundtrip_steps must not be empty");
  for (int k : c.roundtrip_steps) require(k >= 1 && k <= s.steps, "roundtrip_steps must lie in [1, schedule.steps]");
  require(c.inversion_refine >= 0, "inversion_refine must be >= 0");
  require(c.jobs >= 1, "jobs must be >= 1");
  require(c.c_inv.kind() != Condition::Kind::random, "guidance.c_inv cannot be a random prompt");
  for (const auto& tg : c.targets) {
    try {
      Condition::parse(tg);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("targets: ") + e.what());
    }
  }
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  only_keys(j, "config",
            {"schedule", "labels", "dataset", "denoiser", "sampler", "steps", "guidance", "omegas", "scenes", "seed",
             "checkpoint", "output", "widths", "seeds", "roundtrip_steps", "inversion_refine", "jobs", "targets",
             "mixture", "assert_peak"});
  ExperimentConfig c;

  if (j.contains("schedule")) {
    const json& s = j["schedule"];
    only_keys(s, "schedule", {"kind", "steps", "beta_start", "beta_end", "offset"});
    std::string kind = to_string(c.schedule.kind);
    read(s, "kind", kind, "schedule");
    try {
      c.schedule.kind = parse_schedule_kind(kind);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("schedule.kind: ") + e.what());
    }
    read(s, "steps", c.schedule.steps, "schedule");
    read(s, "beta_start", c.schedule.beta_start, "schedule");
    read(s, "beta_end", c.schedule.beta_end, "schedule");
    read(s, "offset", c.schedule.offset, "schedule");
  }

  if (j.contains("labels")) {
    const json& ls = j["labels"];
    if (!ls.is_array()) throw ConfigError("labels: expected an array");
    c.labels.clear();
    for (const auto& l : ls) {
      only_keys(l, "labels[]", {"id", "name", "fundamental_bin", "harmonics", "decay", "envelope_period", "amplitude"});
      SourceLabel sl;
      require(l.contains("id"), "labels[]: id is required");
      read(l, "id", sl.id, "labels[]");
      sl.name = "label" + std::to_string(sl.id);
      read(l, "name", sl.name, "labels[]");
      read(l, "fundamental_bin", sl.fundamental_bin, "labels[]");
      read(l, "harmonics", sl.harmonics, "labels[]");
      read(l, "decay", sl.decay, "labels[]");
      read(l, "envelope_period", sl.envelope_period, "labels[]");
      read(l, "amplitude", sl.amplitude, "labels[]");
      c.labels.push_back(sl);
    }
  }

  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    only_keys(d, "dataset", {"dims", "n_per_label", "pairs"});
    if (d.contains("dims")) c.dataset.dims = parse_dims(d["dims"], "dataset.dims");
    read(d, "n_per_label", c.dataset.n_per_label, "dataset");
    read(d, "pairs", c.dataset.include_pairs, "dataset");
  }

  if (j.contains("denoiser")) {
    const json& d = j["denoiser"];
    only_keys(d, "denoiser",
              {"kind", "hidden", "time_dim", "cond_dim", "dropout", "lr", "epochs", "batch", "min_std"});
    std::string kind = "tiny";
    read(d, "kind", kind, "denoiser");
    if (kind == "tiny") {
      c.denoiser.kind = DenoiserKind::tiny;
    } else if (kind == "analytic") {
      c.denoiser.kind = DenoiserKind::analytic;
    } else {
      throw ConfigError("denoiser.kind: expected analytic or tiny, got '" + kind + "'");
    }
    read(d, "hidden", c.denoiser.tiny.hidden, "denoiser");
    read(d, "time_dim", c.denoiser.tiny.time_dim, "denoiser");
    read(d, "cond_dim", c.denoiser.tiny.cond_dim, "denoiser");
    read(d, "dropout", c.denoiser.tiny.uncond_dropout, "denoiser");
    read(d, "lr", c.denoiser.learning_rate, "denoiser");
    read(d, "epochs", c.denoiser.epochs, "denoiser");
    read(d, "batch", c.denoiser.batch_size, "denoiser");
    read(d, "min_std", c.denoiser.min_std, "denoiser");
  }

  if (j.contains("sampler")) {
    std::string s;
    read(j, "sampler", s, "config");
    try {
      c.sampler = parse_sampler_kind(s);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("sampler: ") + e.what());
    }
  }
  read(j, "steps", c.steps, "config");

  if (j.contains("guidance")) {
    const json& g = j["guidance"];
    only_keys(g, "guidance", {"omega", "c_inv"});
    read(g, "omega", c.omega, "guidance");
    std::string cinv = c.c_inv.to_string();
    read(g, "c_inv", cinv, "guidance");
    try {
      c.c_inv = Condition::parse(cinv);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("guidance.c_inv: ") + e.what());
    }
  }

  read(j, "omegas", c.omegas, "config");
  read(j, "scenes", c.scenes, "config");
  read(j, "seed", c.seed, "config");
  read(j, "checkpoint", c.checkpoint, "config");
  read(j, "output", c.output, "config");
  read(j, "widths", c.widths, "config");
  read(j, "seeds", c.seeds, "config");
  read(j, "roundtrip_steps", c.roundtrip_steps, "config");
  read(j, "inversion_refine", c.inversion_refine, "config");
  read(j, "jobs", c.jobs, "config");
  read(j, "targets", c.targets, "config");
  read(j, "mixture", c.mixture, "config");
  read(j, "assert_peak", c.assert_peak, "config");

  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  json j;
  j["schedule"] = {{"kind", to_string(c.schedule.kind)},
                   {"steps", c.schedule.steps},
                   {"beta_start", c.schedule.beta_start},
                   {"beta_end", c.schedule.beta_end},
                   {"offset", c.schedule.offset}};
  j["labels"] = json::array();
  for (const auto& l : c.labels) {
    j["labels"].push_back({{"id", l.id},
                           {"name", l.name},
                           {"fundamental_bin", l.fundamental_bin},
                           {"harmonics", l.harmonics},
                           {"decay", l.decay},
                           {"envelope_period", l.envelope_period},
                           {"amplitude", l.amplitude}});
  }
  j["dataset"] = {{"dims", {c.dataset.dims.channels, c.dataset.dims.frames, c.dataset.dims.bins}},
                  {"n_per_label", c.dataset.n_per_label},
                  {"pairs", c.dataset.include_pairs}};
  j["denoiser"] = {{"kind", c.denoiser.kind == DenoiserKind::tiny ? "tiny" : "analytic"},
                   {"hidden", c.denoiser.tiny.hidden},
                   {"time_dim", c.denoiser.tiny.time_dim},
                   {"cond_dim", c.denoiser.tiny.cond_dim},
                   {"dropout", c.denoiser.tiny.uncond_dropout},
                   {"lr", c.denoiser.learning_rate},
                   {"epochs", c.denoiser.epochs},
                   {"batch", c.denoiser.batch_size},
                   {"min_std", c.denoiser.min_std}};
  j["sampler"] = to_string(c.sampler);
  j["steps"] = c.steps;
  j["guidance"] = {{"omega", c.omega}, {"c_inv", c.c_inv.to_string()}};
  j["omegas"] = c.omegas;
  j["scenes"] = c.scenes;
  j["seed"] = c.seed;
  j["checkpoint"] = c.checkpoint;
  j["output"] = c.output;
  j["widths"] = c.widths;
  j["seeds"] = c.seeds;
  j["roundtrip_steps"] = c.roundtrip_steps;
  j["inversion_refine"] = c.inversion_refine;
  j["jobs"] = c.jobs;
  j["targets"] = c.targets;
  j["mixture"] = c.mixture;
  j["assert_peak"] = c.assert_peak;
  return j.dump(2) + "\n";
}

LabelRegistry registry_of(const ExperimentConfig& cfg) { return LabelRegistry(cfg.labels); }

}  // namespace zsep
