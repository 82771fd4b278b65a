#pragma once

#include <string>
#include <vector>

#include "contrastlab/optim.hpp"
#include "contrastlab/spectral.hpp"

namespace contrastlab::harness {

struct PropertyVerdict {
  std::string name;
  bool passed = false;
  std::string detail;
  double wall_ms = 0.0;
};

struct ValidationReport {
  std::vector<PropertyVerdict> verdicts;

  bool all_passed() const;
  /// One line per property: "PASS name (12.3 ms) detail".
  std::string format() const;
};

/// Runs every property suite. Failures are recorded, never thrown.
ValidationReport validate_suite(Seed seed);
ValidationReport validate_suite(Seed seed, const EigenSolver& solver);

/// A small random instance of a loss kind with its closed-form target.
struct OracleInstance {
  LossSpec spec;
  LossData data;
  SymTarget target;
  int r = 0;
};

/// d <= 10, n <= 100, r <= 3; fixed masks enumerate all 2^d masks so the
/// fixed-mask loss equals its expectation exactly.
OracleInstance make_oracle_instance(LossKind kind, int d, int r, int n, Seed seed);

struct OracleResult {
  double sin_theta = 0.0;  // GD subspace vs closed-form subspace
  long iterations = 0;
  double final_grad_norm = 0.0;
};

/// Minimizes the instance by gradient descent and compares with the top-r
/// eigenspace of its target computed by `solver`.
OracleResult gd_spectral_check(const OracleInstance& inst, Seed seed, const EigenSolver& solver);

/// Right-singular subspace (d x r) of an r x d representation W.
MatrixXd row_space(const MatrixXd& w);

}  // namespace contrastlab::harness
