// zsep: command-line harness for the separation lab.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "zsep/error.hpp"
#include "zsep/experiments.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitAssertion = 4;

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  std::optional<std::string> sampler;
  std::optional<double> omega;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory (overrides config.output)");
  cmd->add_option("--seed", f.seed, "experiment seed");
  cmd->add_option("--steps", f.steps, "sampling steps");
  cmd->add_option("--sampler", f.sampler, "ddim or ddpm")->check(CLI::IsMember({"ddim", "ddpm"}));
  cmd->add_option("--omega", f.omega, "guidance weight");
  cmd->add_option("--jobs", f.jobs, "worker threads");
}

zsep::ExperimentConfig resolve(const CommonFlags& f) {
  zsep::ExperimentConfig cfg = f.config.empty() ? zsep::ExperimentConfig{} : zsep::load_config(f.config);
  if (!f.out.empty()) cfg.output = f.out;
  if (f.seed) cfg.seed = *f.seed;
  if (f.steps) cfg.steps = *f.steps;
  if (f.sampler) cfg.sampler = zsep::parse_sampler_kind(*f.sampler);
  if (f.omega) cfg.omega = *f.omega;
  if (f.jobs) cfg.jobs = *f.jobs;
  zsep::validate_config(cfg);
  return cfg;
}

void init_logging() {
  auto logger = spdlog::stderr_color_mt("zsep");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("ZSEP_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"zsep: inversion-based source separation lab"};
  app.require_subcommand(1);
  CommonFlags flags;
  bool assert_peak = false;

  auto* train = app.add_subcommand("train", "train or fit the denoiser and write a checkpoint");
  auto* separate = app.add_subcommand("separate", "separate one mixture into its targets");
  auto* sweep = app.add_subcommand("sweep-omega", "separation metrics across guidance weights");
  auto* ablate = app.add_subcommand("ablate-prompts", "inversion / reverse prompt ablation");
  auto* roundtrip = app.add_subcommand("roundtrip", "inversion round-trip error versus steps");
  auto* capacity = app.add_subcommand("capacity-sweep", "denoiser width versus separation quality");
  auto* report = app.add_subcommand("report", "sample-level versus distribution-level metrics");
  for (auto* cmd : {train, separate, sweep, ablate, roundtrip, capacity, report}) add_common(cmd, flags);
  sweep->add_flag("--assert-peak", assert_peak, "exit 4 unless the median SI-SDR peaks at omega = 1");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    zsep::ExperimentConfig cfg = resolve(flags);
    const std::filesystem::path out = cfg.output;
    if (train->parsed()) {
      const auto s = zsep::cmd_train(cfg, out);
      std::cout << "checkpoint " << s.checkpoint.string() << "\n";
    } else if (separate->parsed()) {
      const auto s = zsep::cmd_separate(cfg, out);
      std::cout << s.result.outputs.size() << " target(s) written to " << s.grids.string() << "\n";
    } else if (sweep->parsed()) {
      const auto s = zsep::cmd_sweep_omega(cfg, out);
      for (const auto& o : s.table.summary) {
        std::cout << "omega " << zsep::format_number(o.omega) << " median_si_sdr_db "
                  << zsep::format_number(o.median_si_sdr_db) << "\n";
      }
      if ((assert_peak || cfg.assert_peak) && !s.peak_at_one) {
        std::cerr << "assertion failed: median SI-SDR does not peak at omega = 1\n";
        return kExitAssertion;
      }
    } else if (ablate->parsed()) {
      const auto t = zsep::cmd_ablate_prompts(cfg, out);
      for (const auto& s : t.summary) {
        std::cout << s.config << " median_delta_si_sdr_db " << zsep::format_number(s.median_delta_si_sdr_db) << "\n";
      }
    } else if (roundtrip->parsed()) {
      const auto s = zsep::cmd_roundtrip(cfg, out);
      for (std::size_t k = 0; k < cfg.roundtrip_steps.size(); ++k) {
        std::cout << "ddim steps " << cfg.roundtrip_steps[k] << " median_relative_error "
                  << zsep::format_number(s.ddim_median_error[k]) << "\n";
      }
      std::cout << "ddpm max_abs_error " << zsep::format_number(s.ddpm_max_abs_error) << "\n";
    } else if (capacity->parsed()) {
      const auto s = zsep::cmd_capacity_sweep(cfg, out);
      std::cout << "rank_correlation " << zsep::format_number(s.rank_correlation) << "\n";
    } else if (report->parsed()) {
      const auto r = zsep::cmd_report(cfg, out);
      std::cout << "report " << (out / "report.md").string() << " roundtrip_fad " << zsep::format_number(r.roundtrip_fad)
                << "\n";
    }
  } catch (const zsep::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const zsep::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
