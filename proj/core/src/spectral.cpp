#include "contrastlab/spectral.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "contrastlab/error.hpp"

namespace contrastlab {

namespace {

SymTarget make_target(MatrixXd m, TargetKind kind) {
  MatrixXd sym = 0.5 * (m + m.transpose());
  return SymTarget{std::move(sym), kind};
}

// X (11^T - I) X^T = (X1)(X1)^T - X X^T
MatrixXd off_pair_sum(const MatrixXd& x) {
  const VectorXd s = x.rowwise().sum();
  return s * s.transpose() - x * x.transpose();
}

}  // namespace

std::string_view to_string(TargetKind kind) noexcept {
  switch (kind) {
    case TargetKind::SelfconAugpair: return "selfcon-augpair";
    case TargetKind::SelfconMasking: return "selfcon-masking";
    case TargetKind::Pca: return "pca";
    case TargetKind::MaskedAe: return "masked-ae";
    case TargetKind::SupconHybrid: return "supcon-hybrid";
    case TargetKind::Hsic: return "hsic";
    case TargetKind::TransferHybrid: return "transfer-hybrid";
  }
  return "unknown";
}

DiagSplit split_diagonal(const MatrixXd& m) {
  require(m.rows() == m.cols(), ErrorKind::Dimension, "split_diagonal needs a square matrix");
  DiagSplit out;
  out.diag = MatrixXd::Zero(m.rows(), m.cols());
  out.diag.diagonal() = m.diagonal();
  out.offdiag = m;
  out.offdiag.diagonal().setZero();
  return out;
}

SymTarget augmented_pair_matrix(const MatrixXd& x1, const MatrixXd& x2) {
  require(x1.rows() == x2.rows() && x1.cols() == x2.cols(), ErrorKind::Dimension,
          "augmented views must have matching shapes");
  const auto n = x1.cols();
  require(n >= 2, ErrorKind::ContrastDegeneracy, "need n >= 2 to average over negative pairs");
  const MatrixXd cross = x1 * x2.transpose();
  const MatrixXd sum = x1 + x2;
  MatrixXd m = cross + cross.transpose() - off_pair_sum(sum) / (2.0 * (n - 1));
  return make_target(std::move(m), TargetKind::SelfconAugpair);
}

SymTarget masking_expectation_matrix(const MatrixXd& x) {
  const auto n = x.cols();
  require(n >= 2, ErrorKind::ContrastDegeneracy, "need n >= 2 to average over negative pairs");
  MatrixXd gram = x * x.transpose();
  gram.diagonal().setZero();
  MatrixXd m = gram - off_pair_sum(x) / static_cast<double>(n - 1);
  return make_target(std::move(m), TargetKind::SelfconMasking);
}

SymTarget pca_matrix(const MatrixXd& x) {
  require(x.cols() >= 1, ErrorKind::Dimension, "pca_matrix needs n >= 1");
  const VectorXd mean = x.rowwise().mean();
  const MatrixXd centred = x.colwise() - mean;
  return make_target(centred * centred.transpose(), TargetKind::Pca);
}

SymTarget masked_ae_matrix(const MatrixXd& x) {
  require(x.cols() >= 1, ErrorKind::Dimension, "masked_ae_matrix needs n >= 1");
  MatrixXd m = 0.5 * (x * x.transpose());
  m.diagonal() *= 2.0;
  return make_target(std::move(m), TargetKind::MaskedAe);
}

SymTarget supcon_hybrid_matrix(const MatrixXd& x_unlab, std::span<const MatrixXd> class_blocks,
                               std::span<const double> alpha) {
  const int k = static_cast<int>(class_blocks.size());
  require(k >= 2, ErrorKind::NoNegatives, "supervised contrast needs at least two classes");
  require(static_cast<int>(alpha.size()) == k, ErrorKind::Dimension,
          "alpha must have one weight per class");
  const auto d = class_blocks.front().rows();
  require(x_unlab.cols() == 0 || x_unlab.rows() == d, ErrorKind::Dimension,
          "unlabeled data dimension differs from class blocks");

  std::vector<VectorXd> sums;
  std::vector<long> counts;
  long total = 0;
  for (const MatrixXd& b : class_blocks) {
    require(b.rows() == d, ErrorKind::Dimension, "class blocks must share dimension d");
    require(b.cols() >= 2, ErrorKind::WithinClassContrast,
            "each class needs n_k >= 2 for within-class pairs");
    sums.push_back(b.rowwise().sum());
    counts.push_back(b.cols());
    total += b.cols();
  }

  MatrixXd m = MatrixXd::Zero(d, d);
  const long n = x_unlab.cols();
  if (n > 0) {
    m += masking_expectation_matrix(x_unlab).m / (4.0 * n);
  }

  for (int c = 0; c < k; ++c) {
    if (alpha[c] == 0.0) continue;
    const double nk = static_cast<double>(counts[c]);
    const double others = static_cast<double>(total - counts[c]);
    const MatrixXd within = off_pair_sum(class_blocks[c]) / (nk - 1.0);
    MatrixXd cross = MatrixXd::Zero(d, d);
    for (int s = 0; s < k; ++s) {
      if (s == c) continue;
      const MatrixXd outer = sums[c] * sums[s].transpose();
      cross += 0.5 * (outer + outer.transpose());
    }
    m += (alpha[c] / (k * nk)) * (within - cross / others);
  }
  return make_target(std::move(m), TargetKind::SupconHybrid);
}

SymTarget hsic_cross_matrix(const MatrixXd& x_hat, const VectorXd& y) {
  const auto m = x_hat.cols();
  require(y.size() == m, ErrorKind::Dimension, "y must have one entry per column of x_hat");
  require(m >= 2, ErrorKind::CenteringDegeneracy, "HSIC needs m >= 2");
  const VectorXd centred_y = y.array() - y.mean();
  const VectorXd v = x_hat * centred_y;
  const double scale = 1.0 / (static_cast<double>(m - 1) * static_cast<double>(m - 1));
  return make_target(scale * (v * v.transpose()), TargetKind::Hsic);
}

SymTarget transfer_hybrid_matrix(const MatrixXd& x_unlab, std::span<const LabeledTask> tasks,
                                 std::span<const double> alpha) {
  require(alpha.size() == tasks.size(), ErrorKind::Dimension, "alpha must have one weight per task");
  const long n = x_unlab.cols();
  MatrixXd m = masking_expectation_matrix(x_unlab).m / (4.0 * n);
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    require(tasks[t].x.rows() == x_unlab.rows(), ErrorKind::Dimension,
            "task data dimension differs from unlabeled data");
    if (alpha[t] == 0.0) continue;
    m += alpha[t] * hsic_cross_matrix(tasks[t].x, tasks[t].y).m;
  }
  return make_target(std::move(m), TargetKind::TransferHybrid);
}

// ---------------------------------------------------------------------------
// Eigenspaces

EigenBasis dense_top_r(const MatrixXd& m, int r) {
  const auto d = m.rows();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << "self-adjoint eigensolver did not converge (d = " << d
       << ", ||M||_F = " << m.norm() << ", finite = " << m.allFinite() << ")";
    fail(ErrorKind::Numeric, os.str());
  }
  EigenBasis out;
  out.basis.resize(d, r);
  out.eigvals.resize(r);
  // Eigen returns ascending eigenvalues
  for (int i = 0; i < r; ++i) {
    out.eigvals(i) = es.eigenvalues()(d - 1 - i);
    out.basis.col(i) = es.eigenvectors().col(d - 1 - i);
  }
  out.spectral_norm = es.eigenvalues().cwiseAbs().maxCoeff();
  if (r < d) {
    const double next = es.eigenvalues()(d - 1 - r);
    out.tie = std::abs(out.eigvals(r - 1) - next) <= 1e-10 * std::max(1.0, out.spectral_norm);
  }
  return out;
}

EigenBasis top_r_eigenbasis(const SymTarget& t, int r) {
  return top_r_eigenbasis(t, r, EigenSolver(dense_top_r));
}

EigenBasis top_r_eigenbasis(const SymTarget& t, int r, const EigenSolver& solver) {
  require(t.m.rows() == t.m.cols(), ErrorKind::Dimension, "target must be square");
  require(r >= 1 && r <= t.m.rows(), ErrorKind::Dimension, "need 1 <= r <= d");
  require(t.m.allFinite(), ErrorKind::Numeric, "target contains non-finite entries");
  EigenBasis out = solver ? solver(t.m, r) : dense_top_r(t.m, r);
  require(out.basis.rows() == t.m.rows() && out.basis.cols() == r && out.eigvals.size() == r,
          ErrorKind::Numeric, "eigensolver returned the wrong shape");
  for (int i = 0; i < r; ++i) {
    Eigen::Index pos = 0;
    out.basis.col(i).cwiseAbs().maxCoeff(&pos);
    if (out.basis(pos, i) < 0.0) out.basis.col(i) = -out.basis.col(i);
  }
  return out;
}

Representation representation_from(const SymTarget& t, int r) {
  return representation_from(t, r, EigenSolver(dense_top_r));
}

Representation representation_from(const SymTarget& t, int r, const EigenSolver& solver) {
  const EigenBasis eb = top_r_eigenbasis(t, r, solver);
  Representation rep;
  rep.u = eb.basis;
  rep.tie = eb.tie;
  rep.nonpositive_spectrum = eb.eigvals(r - 1) <= 0.0;
  rep.singular_values = eb.eigvals.cwiseMax(0.0).cwiseSqrt();
  rep.w = rep.singular_values.asDiagonal() * eb.basis.transpose();
  return rep;
}

}  // namespace contrastlab
