#include "contrastlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "contrastlab/error.hpp"

namespace contrastlab {

namespace {

constexpr long kChunk = 1L << 15;
constexpr long kMinClassificationSamples = 10000;

void require_same_shape(const MatrixXd& u1, const MatrixXd& u2) {
  require(u1.rows() == u2.rows() && u1.cols() == u2.cols(), ErrorKind::Dimension,
          "subspace bases must have equal shapes");
}

void require_compatible(const MatrixXd& u, const SpikedModel& model, const TaskSpec& task) {
  require(u.rows() == model.d(), ErrorKind::Dimension, "basis must have d rows");
  require(u.cols() >= 1, ErrorKind::Dimension, "basis must have at least one column");
  require(task.w_star().size() == model.r(), ErrorKind::Dimension, "w* must have length r");
  require_orthonormal(u);
}

VectorXd solve_spd(const MatrixXd& a, const VectorXd& b) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  const VectorXd ev = es.eigenvalues();
  const double top = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (!(ev.minCoeff() > 1e-12 * top)) {
    std::ostringstream os;
    os << "probe moment matrix is singular (lambda_min = " << ev.minCoeff() << ")";
    fail(ErrorKind::Singularity, os.str());
  }
  return es.eigenvectors() * ((es.eigenvectors().transpose() * b).array() / ev.array()).matrix();
}

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  long n = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  void merge(const Moments& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    n += o.n;
  }
  double mean() const { return sum / static_cast<double>(n); }
  double std_error() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sum_sq - n * m * m) / static_cast<double>(n - 1));
    return std::sqrt(var / static_cast<double>(n));
  }
};

// Chunk c of the shared stream: latents, features and one uniform per sample.
struct Draw {
  MatrixXd z;
  MatrixXd x;
  VectorXd noise;
};

Draw draw_chunk(const SpikedModel& model, long count, Seed seed, long chunk) {
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(chunk)}));
  Draw out;
  out.z = model.nu() * rng.gaussian(model.r(), count);
  const MatrixXd xi = model.sigma().asDiagonal() * rng.gaussian(model.d(), count);
  out.x = model.u_star() * out.z + xi;
  out.noise.resize(count);
  for (long i = 0; i < count; ++i) out.noise(i) = rng.uniform();
  return out;
}

// Label noise for regression, on a stream separate from the features.
VectorXd gaussian_noise(Seed seed, long chunk, long count) {
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(chunk), 1}));
  VectorXd e(count);
  for (long i = 0; i < count; ++i) e(i) = rng.normal();
  return e;
}

VectorXd classification_direction(const MatrixXd& u, const SpikedModel& model,
                                  const TaskSpec& task) {
  const ProbeMoments pm = probe_moments(u, model, task);
  if (pm.b.norm() == 0.0) return VectorXd::Zero(u.cols());
  return solve_spd(pm.a, pm.b);
}

}  // namespace

void require_orthonormal(const MatrixXd& u, double tol) {
  const MatrixXd gram = u.transpose() * u;
  const double dev = (gram - MatrixXd::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
  if (!(dev <= tol)) {
    std::ostringstream os;
    os << "basis is not orthonormal (max |U^T U - I| = " << dev << ", tolerance " << tol << ")";
    fail(ErrorKind::Contract, os.str());
  }
}

SubspaceDistance sin_theta(const MatrixXd& u1, const MatrixXd& u2, SubspaceNorm norm) {
  require_same_shape(u1, u2);
  require_orthonormal(u1);
  require_orthonormal(u2);
  SubspaceDistance out;
  out.norm = norm;
  if (norm == SubspaceNorm::Frobenius) {
    const double r = static_cast<double>(u1.cols());
    out.value = std::sqrt(std::max(0.0, r - (u1.transpose() * u2).squaredNorm()));
  } else {
    const MatrixXd resid = u2 - u1 * (u1.transpose() * u2);
    Eigen::JacobiSVD<MatrixXd> svd(resid);
    out.value = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  }
  return out;
}

double sin_theta_complement(const MatrixXd& u1, const MatrixXd& u2) {
  require_same_shape(u1, u2);
  return (u2 - u1 * (u1.transpose() * u2)).norm();
}

double sin_theta_projector(const MatrixXd& u1, const MatrixXd& u2) {
  require_same_shape(u1, u2);
  return (u1 * u1.transpose() - u2 * u2.transpose()).norm() / std::sqrt(2.0);
}

double incoherence(const MatrixXd& u) {
  require_orthonormal(u);
  return u.rowwise().squaredNorm().maxCoeff();
}

ProbeMoments probe_moments(const MatrixXd& u, const SpikedModel& model, const TaskSpec& task) {
  require_compatible(u, model, task);
  const double nu = model.nu();
  const MatrixXd overlap = u.transpose() * model.u_star();  // r_u x r
  ProbeMoments pm;
  pm.a = nu * nu * overlap * overlap.transpose() +
         u.transpose() * model.noise_variances().asDiagonal() * u;
  pm.a = 0.5 * (pm.a + pm.a.transpose());
  pm.b = nu * overlap * task.w_star();
  return pm;
}

VectorXd optimal_probe_weight(const MatrixXd& u, const SpikedModel& model, const TaskSpec& task) {
  const ProbeMoments pm = probe_moments(u, model, task);
  return solve_spd(pm.a, pm.b);
}

double probe_risk(const MatrixXd& u, const VectorXd& w, const SpikedModel& model,
                  const TaskSpec& task) {
  const ProbeMoments pm = probe_moments(u, model, task);
  require(w.size() == u.cols(), ErrorKind::Dimension, "probe weight must match basis width");
  const double var_y = task.w_star().squaredNorm() + task.sigma_eps() * task.sigma_eps();
  return var_y - 2.0 * w.dot(pm.b) + w.dot(pm.a * w);
}

RiskReport regression_excess_risk(const MatrixXd& u, const SpikedModel& model,
                                  const TaskSpec& task) {
  const ProbeMoments pm = probe_moments(u, model, task);
  const double var_y = task.w_star().squaredNorm() + task.sigma_eps() * task.sigma_eps();
  const double explained = pm.b.dot(solve_spd(pm.a, pm.b));

  // At U* the overlap is I_r: A* = nu^2 I + U*^T Sigma U*, b* = nu w*.
  const MatrixXd& us = model.u_star();
  const double nu = model.nu();
  MatrixXd a_star = us.transpose() * model.noise_variances().asDiagonal() * us;
  a_star.diagonal().array() += nu * nu;
  const VectorXd b_star = nu * task.w_star();
  const double explained_star = b_star.dot(solve_spd(a_star, b_star));

  RiskReport rep;
  rep.absolute_risk = var_y - explained;
  rep.excess_risk = explained_star - explained;
  return rep;
}

RiskReport mean_regression_excess_risk(const MatrixXd& u, const SpikedModel& model,
                                       double sigma_eps) {
  return mean_regression_excess_risk(u, model, sigma_eps,
                                     MatrixXd::Identity(model.r(), model.r()));
}

RiskReport mean_regression_excess_risk(const MatrixXd& u, const SpikedModel& model,
                                       double sigma_eps, const MatrixXd& task_basis) {
  require(u.rows() == model.d(), ErrorKind::Dimension, "basis must have d rows");
  require(task_basis.rows() == model.r() && task_basis.cols() >= 1, ErrorKind::Dimension,
          "task basis must be r x k with k >= 1");
  require_orthonormal(u);
  require_orthonormal(task_basis);
  const double nu = model.nu();
  const MatrixXd overlap = u.transpose() * model.u_star();
  MatrixXd a = nu * nu * overlap * overlap.transpose() +
               u.transpose() * model.noise_variances().asDiagonal() * u;
  a = 0.5 * (a + a.transpose());
  const MatrixXd& us = model.u_star();
  MatrixXd a_star = us.transpose() * model.noise_variances().asDiagonal() * us;
  a_star.diagonal().array() += nu * nu;

  // E[w w^T] = Q Q^T / k for w uniform on the unit sphere of col(Q).
  double explained = 0.0;
  double explained_star = 0.0;
  for (Eigen::Index j = 0; j < task_basis.cols(); ++j) {
    const VectorXd b = nu * overlap * task_basis.col(j);
    if (b.norm() > 0.0) explained += b.dot(solve_spd(a, b));
    const VectorXd b_star = nu * task_basis.col(j);
    explained_star += b_star.dot(solve_spd(a_star, b_star));
  }
  const double k = static_cast<double>(task_basis.cols());
  RiskReport rep;
  rep.absolute_risk = 1.0 + sigma_eps * sigma_eps - explained / k;
  rep.excess_risk = (explained_star - explained) / k;
  return rep;
}

RiskReport regression_risk_mc(const MatrixXd& u, const VectorXd& w, const SpikedModel& model,
                              const TaskSpec& task, long n_mc, Seed seed) {
  require_compatible(u, model, task);
  require(n_mc >= 2, ErrorKind::Contract, "Monte-Carlo risk needs n_mc >= 2");
  require(w.size() == u.cols(), ErrorKind::Dimension, "probe weight must match basis width");
  require(model.nu() > 0.0, ErrorKind::DivisionByZero, "regression response divides by nu");
  const VectorXd w_opt = optimal_probe_weight(model.u_star(), model, task);
  const VectorXd dir = u * w;
  const VectorXd dir_star = model.u_star() * w_opt;
  const VectorXd coef = task.w_star() / model.nu();

  Moments abs_m;
  Moments diff_m;
  for (long start = 0, chunk = 0; start < n_mc; start += kChunk, ++chunk) {
    const long count = std::min(kChunk, n_mc - start);
    const Draw dr = draw_chunk(model, count, seed, chunk);
    const VectorXd eps = task.sigma_eps() * gaussian_noise(seed, chunk, count);
    const VectorXd y = dr.z.transpose() * coef + eps;
    const VectorXd pred = dr.x.transpose() * dir;
    const VectorXd pred_star = dr.x.transpose() * dir_star;
    for (long i = 0; i < count; ++i) {
      const double l = (y(i) - pred(i)) * (y(i) - pred(i));
      const double l_star = (y(i) - pred_star(i)) * (y(i) - pred_star(i));
      abs_m.add(l);
      diff_m.add(l - l_star);
    }
  }
  RiskReport rep;
  rep.absolute_risk = abs_m.mean();
  rep.absolute_std_error = abs_m.std_error();
  rep.excess_risk = diff_m.mean();
  rep.std_error = diff_m.std_error();
  rep.n_mc = n_mc;
  return rep;
}

RiskReport classification_risk(const MatrixXd& u, const SpikedModel& model, const TaskSpec& task,
                               long n_mc, Seed seed) {
  const VectorXd w = classification_direction(u, model, task);
  return classification_risk_with(u, w, model, task, n_mc, seed);
}

RiskReport classification_risk_with(const MatrixXd& u, const VectorXd& w,
                                    const SpikedModel& model, const TaskSpec& task, long n_mc,
                                    Seed seed) {
  require_compatible(u, model, task);
  require(n_mc >= kMinClassificationSamples, ErrorKind::Contract,
          "classification risk needs n_mc >= 1e4");
  require(w.size() == u.cols(), ErrorKind::Dimension, "probe weight must match basis width");
  require(model.nu() > 0.0, ErrorKind::DivisionByZero, "response model divides by nu");
  const VectorXd w_star_probe = classification_direction(model.u_star(), model, task);
  const VectorXd dir = u * w;
  const VectorXd dir_star = model.u_star() * w_star_probe;
  const VectorXd coef = task.w_star() / model.nu();

  Moments abs_m;
  Moments diff_m;
  for (long start = 0, chunk = 0; start < n_mc; start += kChunk, ++chunk) {
    const long count = std::min(kChunk, n_mc - start);
    const Draw dr = draw_chunk(model, count, seed, chunk);
    const VectorXd score = dr.z.transpose() * coef;
    const VectorXd pred = dr.x.transpose() * dir;
    const VectorXd pred_star = dr.x.transpose() * dir_star;
    for (long i = 0; i < count; ++i) {
      const bool y = dr.noise(i) < task.link_cdf(score(i));
      const double l = ((pred(i) >= 0.0) != y) ? 1.0 : 0.0;
      const double l_star = ((pred_star(i) >= 0.0) != y) ? 1.0 : 0.0;
      abs_m.add(l);
      diff_m.add(l - l_star);
    }
  }
  RiskReport rep;
  rep.absolute_risk = abs_m.mean();
  rep.absolute_std_error = abs_m.std_error();
  rep.excess_risk = diff_m.mean();
  rep.std_error = diff_m.std_error();
  rep.n_mc = n_mc;
  return rep;
}

}  // namespace contrastlab
