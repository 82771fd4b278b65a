#pragma once

// Closed-form targets. Each loss in the library is minimized by the top-r
// eigenspace of a symmetric d x d matrix built from the data; this header
// builds those matrices and extracts the eigenspaces.

#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "contrastlab/datagen.hpp"

namespace contrastlab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class TargetKind {
  SelfconAugpair,
  SelfconMasking,
  Pca,
  MaskedAe,
  SupconHybrid,
  Hsic,
  TransferHybrid,
};

std::string_view to_string(TargetKind kind) noexcept;

struct SymTarget {
  MatrixXd m;
  TargetKind provenance;
};

struct DiagSplit {
  MatrixXd diag;     // D(m)
  MatrixXd offdiag;  // Delta(m)
};

DiagSplit split_diagonal(const MatrixXd& m);

/// X1 X2^T + X2 X1^T - 1/(2(n-1)) (X1+X2)(11^T - I)(X1+X2)^T
SymTarget augmented_pair_matrix(const MatrixXd& x1, const MatrixXd& x2);

/// Delta(X X^T) - 1/(n-1) X (11^T - I) X^T, the random-masking expectation
/// of augmented_pair_matrix up to a factor of 2.
SymTarget masking_expectation_matrix(const MatrixXd& x);

/// Centered Gram X (I - 11^T/n) X^T.
SymTarget pca_matrix(const MatrixXd& x);

/// (1/2) Delta(X X^T) + D(X X^T).
SymTarget masked_ae_matrix(const MatrixXd& x);

/// Hybrid self-supervised + supervised contrastive target with per-class
/// weights alpha_k. `x_unlab` may have zero columns (pure supervised).
SymTarget supcon_hybrid_matrix(const MatrixXd& x_unlab, std::span<const MatrixXd> class_blocks,
                               std::span<const double> alpha);

/// 1/(m-1)^2 (X H y)(X H y)^T with H the m x m centering matrix.
SymTarget hsic_cross_matrix(const MatrixXd& x_hat, const VectorXd& y);

/// (1/4n) masking target + sum_t alpha_t hsic_cross_matrix(x_t, y_t).
SymTarget transfer_hybrid_matrix(const MatrixXd& x_unlab, std::span<const LabeledTask> tasks,
                                 std::span<const double> alpha);

struct EigenBasis {
  MatrixXd basis;    // d x r, orthonormal
  VectorXd eigvals;  // r, descending
  /// lambda_r and lambda_{r+1} coincide within 1e-10 * max(1, ||M||_2):
  /// the top-r subspace is not unique.
  bool tie = false;
  double spectral_norm = 0.0;
};

using EigenSolver = std::function<EigenBasis(const MatrixXd&, int)>;

/// Eigenvectors of the r algebraically largest eigenvalues. The largest
/// magnitude entry of each returned eigenvector is positive.
EigenBasis top_r_eigenbasis(const SymTarget& t, int r);
EigenBasis top_r_eigenbasis(const SymTarget& t, int r, const EigenSolver& solver);

/// Dense self-adjoint solver used by default (thread-safe, no shared state).
EigenBasis dense_top_r(const MatrixXd& m, int r);

struct Representation {
  MatrixXd w;                // r x d
  MatrixXd u;                // d x r, right-singular subspace of w
  VectorXd singular_values;  // sqrt(max(lambda_i, 0))
  bool nonpositive_spectrum = false;  // lambda_r <= 0, singular values clipped
  bool tie = false;
};

/// W = (sum_i u_i sqrt(max(lambda_i, 0)) e_i^T)^T, i.e. C = 1 and V = I.
Representation representation_from(const SymTarget& t, int r);
Representation representation_from(const SymTarget& t, int r, const EigenSolver& solver);

}  // namespace contrastlab
