#pragma once

// Experiment configuration: a flat key = value schema.
//
//   experiment     recover-sweep-d | recover-sweep-n | transfer-sweep-alpha |
//                  supcon-sweep-m | validate
//   d, n, m        integer or comma list; the swept one is the grid
//   t              number of source tasks (transfer)
//   r, nu          rank and signal scale
//   sigma          scalar, or d comma-separated standard deviations
//   noise_profile  two-level | constant | linear   (used when sigma is scalar)
//   noise_tail     ratio of tail to head noise for two-level / linear
//   sigma_eps      downstream label noise
//   replicates, seed, threads
//   solvers        comma list from cl-masking, cl-gd, autoencoder, masked-ae,
//                  supcon, transfer
//   alpha_grid     comma list of log_e(alpha)
//   probe          population | refit;  probe_m  labeled samples for refit
//   test_task      haar | sphere-mean | source-rule  (source-rule: drawn like the
//                  source tasks; sphere-mean outside transfer)
//   gd_iters, gd_step_scale
//   timing         true | false   (wall_time_ms is 0 unless true)
//   out            output directory
//
// Blank lines and lines starting with '#' are ignored.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "contrastlab/rng.hpp"

namespace contrastlab::harness {

enum class ExperimentKind { RecoverSweepD, RecoverSweepN, TransferSweepAlpha, SupconSweepM, Validate };

enum class SolverKind { ClMasking, ClGd, Autoencoder, MaskedAe, Supcon, Transfer };

enum class NoiseProfile { TwoLevel, Constant, Linear };

enum class ProbeMode { Population, Refit };

enum class TestTask { Haar, SphereMean, SourceRule };

std::string_view to_string(ExperimentKind k) noexcept;
std::string_view to_string(SolverKind k) noexcept;
std::string_view to_string(NoiseProfile k) noexcept;

ExperimentKind parse_experiment(std::string_view s);
SolverKind parse_solver(std::string_view s);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::RecoverSweepD;
  std::vector<int> d{40};
  std::vector<int> n{20000};
  std::vector<int> m{1000};
  int t = 8;
  int r = 5;
  double nu = 1.0;
  double sigma = 2.0;
  std::vector<double> sigma_vec;  // overrides sigma/noise_profile when set
  NoiseProfile noise_profile = NoiseProfile::TwoLevel;
  double noise_tail = 0.25;
  double sigma_eps = 0.0;
  int replicates = 20;
  Seed seed = 0;
  int threads = 0;  // 0: hardware concurrency
  std::vector<SolverKind> solvers{SolverKind::ClMasking, SolverKind::Autoencoder};
  std::vector<double> alpha_grid{-5, -4, -3, -2, -1, 0, 1, 2, 3, 4, 5};
  ProbeMode probe = ProbeMode::Population;
  int probe_m = 1000;
  TestTask test_task = TestTask::SphereMean;
  long gd_iters = 10000;
  double gd_step_scale = 1.0;
  bool timing = false;
  std::string out = "out";

  /// Throws a config error naming the first violated constraint.
  void validate() const;

  /// Per-coordinate noise standard deviations at dimension d.
  Eigen::VectorXd noise_sigma(int d) const;

  /// Name and values of the swept variable.
  std::string sweep_variable() const;
  std::vector<double> sweep_values() const;
};

/// Defaults for an experiment kind (r = 10, n = m = 1000 for transfer, etc.).
ExperimentConfig default_config(ExperimentKind kind);

/// Applies key = value overrides on top of default_config(experiment).
/// The map must contain "experiment". Unknown keys are a config error.
ExperimentConfig config_from_pairs(const std::map<std::string, std::string>& kv);

/// Parses the text of a config file.
ExperimentConfig parse_config(std::string_view text);

/// Reads and parses a config file; missing file is an I/O error.
ExperimentConfig load_config(const std::string& path);

/// The recognised keys, in schema order.
const std::vector<std::string>& config_keys();

}  // namespace contrastlab::harness
