// contrastlab: run experiment sweeps and the validation suite.
//
//   contrastlab run --config sweep.cfg
//   contrastlab run --experiment recover-sweep-d --d 20,40,80 --out out/d
//   contrastlab validate --seed 7
//
// Exit codes: 0 success, 1 validation failure, 2 config error, 3 I/O error.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "contrastlab/error.hpp"
#include "contrastlab/harness/config.hpp"
#include "contrastlab/harness/experiment.hpp"
#include "contrastlab/harness/validate.hpp"

namespace {

namespace cl = contrastlab;
namespace h = contrastlab::harness;

constexpr int kOk = 0;
constexpr int kValidationFailed = 1;
constexpr int kConfigError = 2;
constexpr int kIoError = 3;

int run_validate(cl::Seed seed) {
  const h::ValidationReport rep = h::validate_suite(seed);
  std::cout << rep.format();
  const bool ok = rep.all_passed();
  std::cout << (ok ? "all properties passed\n" : "validation FAILED\n");
  return ok ? kOk : kValidationFailed;
}

int run_config(const h::ExperimentConfig& cfg) {
  if (cfg.experiment == h::ExperimentKind::Validate) return run_validate(cfg.seed);
  const auto rows = h::run_and_write(cfg);
  int failed = 0;
  for (const auto& r : rows) failed += r.status != "ok";
  std::cout << "wrote " << rows.size() << " rows (" << failed << " failed) to " << cfg.out
            << "/results.csv and " << cfg.out << "/summary.md\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear contrastive-learning laboratory"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment sweep");
  std::string config_path;
  std::map<std::string, std::string> flags;
  auto* config_opt = run->add_option("--config", config_path, "Flat key = value config file");
  auto* exp_opt = run->add_option("--experiment", flags["experiment"],
                                  "recover-sweep-d | recover-sweep-n | transfer-sweep-alpha | "
                                  "supcon-sweep-m | validate");
  config_opt->excludes(exp_opt);

  // Every remaining flag maps onto the config key of the same name.
  const std::vector<std::pair<std::string, std::string>> keyed = {
      {"--d", "d"},
      {"--n", "n"},
      {"--m", "m"},
      {"--t", "t"},
      {"--r", "r"},
      {"--nu", "nu"},
      {"--sigma", "sigma"},
      {"--noise-profile", "noise_profile"},
      {"--noise-tail", "noise_tail"},
      {"--sigma-eps", "sigma_eps"},
      {"--replicates", "replicates"},
      {"--seed", "seed"},
      {"--threads", "threads"},
      {"--solvers", "solvers"},
      {"--alpha-grid", "alpha_grid"},
      {"--probe", "probe"},
      {"--probe-m", "probe_m"},
      {"--test-task", "test_task"},
      {"--gd-iters", "gd_iters"},
      {"--gd-step-scale", "gd_step_scale"},
      {"--timing", "timing"},
      {"--out", "out"},
  };
  for (const auto& [flag, key] : keyed) {
    auto* opt = run->add_option(flag, flags[key], "config key '" + key + "'");
    opt->excludes(config_opt);
  }

  auto* validate = app.add_subcommand("validate", "Run all property suites");
  cl::Seed validate_seed = 0;
  validate->add_option("--seed", validate_seed, "Base seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*validate) return run_validate(validate_seed);

    h::ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = h::load_config(config_path);
    } else {
      std::map<std::string, std::string> kv;
      for (const auto& [key, value] : flags)
        if (!value.empty()) kv[key] = value;
      if (!kv.count("experiment")) {
        std::cerr << "run: one of --config or --experiment is required\n";
        return kConfigError;
      }
      cfg = h::config_from_pairs(kv);
    }
    return run_config(cfg);
  } catch (const cl::Error& e) {
    std::cerr << e.what() << '\n';
    switch (e.kind()) {
      case cl::ErrorKind::Config: return kConfigError;
      case cl::ErrorKind::Io: return kIoError;
      default: return kValidationFailed;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidationFailed;
  }
}
