#pragma once

// Generative models: spiked covariance data, Gaussian mixtures, regression
// tasks and random masking augmentations. Every sampler takes an explicit
// seed and returns its latents so tests can see ground truth.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "contrastlab/rng.hpp"

namespace contrastlab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// x = U* z + xi with Cov(z) = nu^2 I_r and Cov(xi) = diag(sigma^2).
class SpikedModel {
 public:
  /// Validates orthonormality of u_star (1e-12 entrywise), nu >= 0 and
  /// sigma >= 0 with sigma.size() == u_star.rows().
  SpikedModel(MatrixXd u_star, double nu, VectorXd sigma);

  const MatrixXd& u_star() const { return u_star_; }
  double nu() const { return nu_; }
  const VectorXd& sigma() const { return sigma_; }
  int d() const { return static_cast<int>(u_star_.rows()); }
  int r() const { return static_cast<int>(u_star_.cols()); }

  /// Condition number sigma_(1)^2 / sigma_(d)^2 of the noise covariance.
  double kappa() const;
  /// Signal-to-noise ratio nu / sigma_(1).
  double rho() const;

  VectorXd noise_variances() const { return sigma_.array().square(); }
  /// nu^2 U* U*^T + diag(sigma^2)
  MatrixXd population_covariance() const;

 private:
  MatrixXd u_star_;
  double nu_;
  VectorXd sigma_;
};

struct SampleBatch {
  MatrixXd x;   // d x n
  MatrixXd z;   // r x n
  MatrixXd xi;  // d x n
  Seed seed = 0;
};

/// K-class Gaussian mixture with diagonal class covariances.
struct MixtureModel {
  std::vector<VectorXd> means;
  std::vector<VectorXd> covs;  // per-class variance vectors
  std::vector<double> probs;

  int d() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
  int num_classes() const { return static_cast<int>(means.size()); }

  /// sum_k p_k mu_k mu_k^T
  MatrixXd mean_second_moment() const;
  /// Orthonormal basis (d x (K-1)) of span{mu_k}: the recovery target.
  MatrixXd signal_basis() const;
  /// Throws ContractError unless the identifiability and norm invariants hold.
  void validate(double nu, double tol = 1e-10) const;
};

/// Means are scaled simplex vertices rotated by a Haar basis so that
/// sum_k p_k mu_k = 0 and ||mu_k|| = sqrt(r) nu. K = r + 1 classes. Every
/// class shares the noise standard deviations `sigma`.
MixtureModel make_mixture(int d, int r, double nu, const VectorXd& sigma,
                          std::vector<double> probs, Seed seed);

struct LabeledBatch {
  MatrixXd x;               // d x sum(n_k), class blocks contiguous
  std::vector<int> labels;  // aligned with columns of x
  std::vector<int> counts;

  /// Columns of class k as a d x n_k matrix.
  MatrixXd block(int k) const;
  std::vector<MatrixXd> blocks() const;
};

enum class Link { Logistic, Probit };

/// Downstream task: y = <w*, z>/nu + eps (regression) or
/// y ~ Ber(F(<w*, z>/nu)) (classification).
class TaskSpec {
 public:
  TaskSpec(VectorXd w_star, double sigma_eps, Link link = Link::Logistic);

  const VectorXd& w_star() const { return w_star_; }
  double sigma_eps() const { return sigma_eps_; }
  Link link() const { return link_; }

  /// F(u) for the configured link.
  double link_cdf(double u) const;

 private:
  VectorXd w_star_;
  double sigma_eps_;
  Link link_;
};

/// Diagonal 0/1 mask A; the two views are A x and (I - A) x.
struct DiagMask {
  std::vector<std::uint8_t> bits;

  int d() const { return static_cast<int>(bits.size()); }
  DiagMask complement() const;
  VectorXd diagonal() const;
  /// A x (rows where the bit is 0 are zeroed)
  MatrixXd apply(const MatrixXd& x) const;
  /// (I - A) x
  MatrixXd apply_complement(const MatrixXd& x) const;

  /// Mask whose bit i is bit i of `code` (used for exhaustive enumeration).
  static DiagMask from_code(int d, std::uint64_t code);
};

/// Labeled source-task data used by the HSIC terms.
struct LabeledTask {
  MatrixXd x;  // d x m_t
  VectorXd y;  // m_t
};

struct RegressionBatch {
  MatrixXd x;  // d x m
  VectorXd y;  // m
  MatrixXd z;  // r x m
};

/// Haar-distributed d x r orthonormal basis via QR of a Gaussian matrix,
/// with the signs of R's diagonal fixed positive. Requires 1 <= r <= d.
MatrixXd sample_uniform_orthobasis(int d, int r, Seed seed);

SampleBatch sample_spiked(const SpikedModel& model, int n, Seed seed);

LabeledBatch sample_mixture(const MixtureModel& gmm, std::span<const int> counts, Seed seed);

/// y_i = <w_t, z_i> / nu, no label noise.
RegressionBatch sample_regression_task(const SpikedModel& model, const VectorXd& w_t, int m,
                                       Seed seed);

DiagMask random_mask(int d, Seed seed);
DiagMask random_mask(int d, Rng& rng);

}  // namespace contrastlab
