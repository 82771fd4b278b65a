#pragma once

#include <functional>
#include <string>
#include <vector>

#include "contrastlab/harness/config.hpp"
#include "contrastlab/spectral.hpp"

namespace contrastlab::harness {

struct ResultRow {
  std::string experiment;
  std::string solver;
  std::string sweep_var;
  double sweep_value = 0.0;
  int grid_index = 0;
  int replicate = 0;
  Seed seed = 0;
  double sin_theta_f = 0.0;
  double excess_risk = 0.0;
  double std_error = 0.0;
  double wall_time_ms = 0.0;
  std::string status = "ok";  // "ok" or an error kind
};

/// Runs every (grid point, replicate) work item, fitting each solver.
/// Rows are ordered by grid point, then solver (config order), then replicate.
/// Solver failures yield a row with status set and NaN metrics.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

/// Same, with an explicit eigensolver for the spectral solvers.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, const EigenSolver& solver);

/// Runs run_experiment and writes <out>/results.csv and <out>/summary.md.
std::vector<ResultRow> run_and_write(const ExperimentConfig& cfg);

/// Calls fn(i) for i in [0, count) on `threads` workers (0: hardware).
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace contrastlab::harness
