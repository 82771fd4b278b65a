#pragma once

// Subspace distances, incoherence and downstream risk of a learned subspace.

#include <Eigen/Dense>

#include "contrastlab/datagen.hpp"

namespace contrastlab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class SubspaceNorm { Frobenius, Spectral };

struct SubspaceDistance {
  double value = 0.0;
  SubspaceNorm norm = SubspaceNorm::Frobenius;
};

/// ||sin Theta(u1, u2)||. Frobenius: sqrt(max(0, r - ||u1^T u2||_F^2)).
/// Spectral: largest singular value of (I - u1 u1^T) u2.
SubspaceDistance sin_theta(const MatrixXd& u1, const MatrixXd& u2,
                           SubspaceNorm norm = SubspaceNorm::Frobenius);

/// ||(I - u1 u1^T) u2||_F, the complement form.
double sin_theta_complement(const MatrixXd& u1, const MatrixXd& u2);

/// (1/sqrt 2) ||u1 u1^T - u2 u2^T||_F.
double sin_theta_projector(const MatrixXd& u1, const MatrixXd& u2);

/// max_i ||e_i^T u||^2
double incoherence(const MatrixXd& u);

/// Throws a contract error naming the measured deviation unless
/// |u^T u - I| <= tol entrywise.
void require_orthonormal(const MatrixXd& u, double tol = 1e-8);

/// Population moments of a linear probe on u^T x for the regression task:
/// A = nu^2 u^T U* U*^T u + u^T Sigma u, b = nu u^T U* w*.
struct ProbeMoments {
  MatrixXd a;
  VectorXd b;
};

ProbeMoments probe_moments(const MatrixXd& u, const SpikedModel& model, const TaskSpec& task);

/// A^{-1} b, the population squared-error minimizer over probes on u^T x.
VectorXd optimal_probe_weight(const MatrixXd& u, const SpikedModel& model, const TaskSpec& task);

/// Population squared-error risk of the predictor w^T u^T x.
double probe_risk(const MatrixXd& u, const VectorXd& w, const SpikedModel& model,
                  const TaskSpec& task);

struct RiskReport {
  double absolute_risk = 0.0;
  double excess_risk = 0.0;
  /// Standard error of excess_risk; 0 for closed forms.
  double std_error = 0.0;
  /// Standard error of absolute_risk; 0 for closed forms.
  double absolute_std_error = 0.0;
  long n_mc = 0;
};

/// Closed form: ||w*||^2 + sigma_eps^2 - b^T A^{-1} b, minus the same at U*.
RiskReport regression_excess_risk(const MatrixXd& u, const SpikedModel& model,
                                  const TaskSpec& task);

/// regression_excess_risk averaged over w* uniform on the unit sphere in R^r:
/// (1/r) tr(nu^2 A*^{-1}) - (1/r) tr(nu^2 O^T A^{-1} O) with O = u^T U*.
RiskReport mean_regression_excess_risk(const MatrixXd& u, const SpikedModel& model,
                                       double sigma_eps);

/// As above with w* uniform on the unit sphere of col(task_basis) (r x k,
/// orthonormal columns).
RiskReport mean_regression_excess_risk(const MatrixXd& u, const SpikedModel& model,
                                       double sigma_eps, const MatrixXd& task_basis);

/// Monte-Carlo estimate of the regression risk of probe w on u over n_mc
/// fresh samples; the excess is paired against the optimal probe on U*.
RiskReport regression_risk_mc(const MatrixXd& u, const VectorXd& w, const SpikedModel& model,
                              const TaskSpec& task, long n_mc, Seed seed);

/// 0-1 risk of sign(w^T u^T x) with w proportional to (u^T Sigma_x u)^{-1} u^T U* w*.
/// The U* arm reuses the same random stream.
RiskReport classification_risk(const MatrixXd& u, const SpikedModel& model, const TaskSpec& task,
                               long n_mc, Seed seed);

/// As above with an explicit probe weight (used to check the choice of w).
RiskReport classification_risk_with(const MatrixXd& u, const VectorXd& w,
                                    const SpikedModel& model, const TaskSpec& task, long n_mc,
                                    Seed seed);

}  // namespace contrastlab
