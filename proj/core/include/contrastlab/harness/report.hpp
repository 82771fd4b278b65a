#pragma once

#include <string>
#include <vector>

#include "contrastlab/harness/config.hpp"
#include "contrastlab/harness/experiment.hpp"

namespace contrastlab::harness {

/// Header plus one line per row; doubles printed with %.17g.
std::string format_csv(const std::vector<ResultRow>& rows);

/// Parses the output of format_csv.
std::vector<ResultRow> parse_csv(const std::string& text);

/// Cell aggregate over the ok rows of one (solver, grid point).
struct CellStat {
  double mean = 0.0;
  double std_error = 0.0;
  int count = 0;
};

CellStat aggregate(const std::vector<double>& values);

/// Markdown tables of sin_theta_f and excess_risk: one row per solver, one
/// column per grid value, cells "mean ± stderr" with the mean at %.15g.
std::string format_summary(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows);

/// Writes results.csv and summary.md under dir (created if needed).
/// Failure to write is an I/O error.
void write_outputs(const std::string& dir, const ExperimentConfig& cfg,
                   const std::vector<ResultRow>& rows);

}  // namespace contrastlab::harness
