#include "contrastlab/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "contrastlab/error.hpp"

namespace contrastlab {

namespace {

double max_orthonormality_defect(const MatrixXd& u) {
  const MatrixXd gram = u.transpose() * u;
  return (gram - MatrixXd::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
}

}  // namespace

// ---------------------------------------------------------------------------
// SpikedModel

SpikedModel::SpikedModel(MatrixXd u_star, double nu, VectorXd sigma)
    : u_star_(std::move(u_star)), nu_(nu), sigma_(std::move(sigma)) {
  require(u_star_.rows() >= 1 && u_star_.cols() >= 1, ErrorKind::Dimension,
          "u_star must be non-empty");
  require(u_star_.cols() <= u_star_.rows(), ErrorKind::Dimension, "u_star must have r <= d");
  require(sigma_.size() == u_star_.rows(), ErrorKind::Dimension,
          "sigma must have one entry per ambient dimension");
  require(std::isfinite(nu_) && nu_ >= 0.0, ErrorKind::Contract, "nu must be finite and >= 0");
  require(sigma_.allFinite() && (sigma_.array() >= 0.0).all(), ErrorKind::Contract,
          "sigma entries must be finite and >= 0");
  const double defect = max_orthonormality_defect(u_star_);
  if (defect > 1e-12) {
    std::ostringstream os;
    os << "u_star is not orthonormal (max |U^T U - I| = " << defect << ")";
    fail(ErrorKind::Contract, os.str());
  }
}

double SpikedModel::kappa() const {
  const VectorXd v = noise_variances();
  return v.maxCoeff() / v.minCoeff();
}

double SpikedModel::rho() const { return nu_ / sigma_.maxCoeff(); }

MatrixXd SpikedModel::population_covariance() const {
  MatrixXd cov = nu_ * nu_ * (u_star_ * u_star_.transpose());
  cov.diagonal() += noise_variances();
  return cov;
}

// ---------------------------------------------------------------------------
// Mixture

MatrixXd MixtureModel::mean_second_moment() const {
  MatrixXd lambda = MatrixXd::Zero(d(), d());
  for (int k = 0; k < num_classes(); ++k) lambda += probs[k] * means[k] * means[k].transpose();
  return lambda;
}

MatrixXd MixtureModel::signal_basis() const {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(mean_second_moment());
  const int r = num_classes() - 1;
  // eigenvalues ascending; take the top r
  return es.eigenvectors().rightCols(r).rowwise().reverse();
}

void MixtureModel::validate(double nu, double tol) const {
  const int k = num_classes();
  require(k >= 2, ErrorKind::Contract, "mixture needs at least two classes");
  require(static_cast<int>(covs.size()) == k && static_cast<int>(probs.size()) == k,
          ErrorKind::Dimension, "means, covs and probs must have the same length");
  const double psum = std::accumulate(probs.begin(), probs.end(), 0.0);
  require(std::abs(psum - 1.0) <= 1e-12, ErrorKind::Contract, "probs must sum to 1");
  VectorXd centre = VectorXd::Zero(d());
  for (int i = 0; i < k; ++i) {
    require(probs[i] >= 0.0, ErrorKind::Contract, "probs must be nonnegative");
    require(means[i].size() == d() && covs[i].size() == d(), ErrorKind::Dimension,
            "class parameters must have dimension d");
    require(std::abs(means[i].norm() - std::sqrt(k - 1.0) * nu) <= tol, ErrorKind::Contract,
            "each class mean must have norm sqrt(r) nu");
    centre += probs[i] * means[i];
  }
  require(centre.norm() <= tol, ErrorKind::Contract, "sum_k p_k mu_k must vanish");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(mean_second_moment());
  require(es.eigenvalues()(d() - (k - 1)) > tol, ErrorKind::Contract,
          "class means must span an r-dimensional subspace");
}

MixtureModel make_mixture(int d, int r, double nu, const VectorXd& sigma,
                          std::vector<double> probs, Seed seed) {
  require(r >= 1 && r < d, ErrorKind::Dimension, "mixture requires 1 <= r < d");
  require(sigma.size() == d, ErrorKind::Dimension, "sigma must have length d");
  const int k = r + 1;
  if (probs.empty()) probs.assign(k, 1.0 / k);
  require(static_cast<int>(probs.size()) == k, ErrorKind::Dimension, "probs must have r+1 entries");

  // Regular simplex vertices e_k - 1/K in R^K, expressed in an orthonormal
  // basis of the sum-zero hyperplane (the top-r eigenvectors of the centring
  // projector).
  const MatrixXd centring =
      MatrixXd::Identity(k, k) - MatrixXd::Constant(k, k, 1.0 / k);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(centring);
  const MatrixXd plane = es.eigenvectors().rightCols(r);  // K x r
  MatrixXd v = plane.transpose() * centring;              // r x K, column k = vertex k
  for (int j = 0; j < k; ++j) v.col(j).normalize();

  // Unequal class weights: alternately recentre and renormalise until the
  // weighted centroid vanishes.
  const Eigen::Map<const VectorXd> p(probs.data(), k);
  for (int it = 0; it < 100000; ++it) {
    const VectorXd c = v * p;
    if (c.norm() <= 1e-15) break;
    v.colwise() -= c;
    for (int j = 0; j < k; ++j) v.col(j).normalize();
  }
  require((v * p).norm() <= 1e-12, ErrorKind::Numeric,
          "could not balance class means for the given probabilities");

  const MatrixXd rot = sample_uniform_orthobasis(d, r, seed);
  MixtureModel gmm;
  gmm.probs = std::move(probs);
  const double scale = std::sqrt(static_cast<double>(r)) * nu;
  const VectorXd var = sigma.array().square();
  for (int j = 0; j < k; ++j) {
    gmm.means.push_back(scale * (rot * v.col(j)));
    gmm.covs.push_back(var);
  }
  gmm.validate(nu);
  return gmm;
}

MatrixXd LabeledBatch::block(int k) const {
  require(k >= 0 && k < static_cast<int>(counts.size()), ErrorKind::Dimension,
          "class index out of range");
  const int start = std::accumulate(counts.begin(), counts.begin() + k, 0);
  return x.middleCols(start, counts[k]);
}

std::vector<MatrixXd> LabeledBatch::blocks() const {
  std::vector<MatrixXd> out;
  out.reserve(counts.size());
  for (int k = 0; k < static_cast<int>(counts.size()); ++k) out.push_back(block(k));
  return out;
}

// ---------------------------------------------------------------------------
// TaskSpec

TaskSpec::TaskSpec(VectorXd w_star, double sigma_eps, Link link)
    : w_star_(std::move(w_star)), sigma_eps_(sigma_eps), link_(link) {
  require(w_star_.size() >= 1, ErrorKind::Dimension, "w_star must be non-empty");
  require(std::abs(w_star_.norm() - 1.0) <= 1e-12, ErrorKind::Contract,
          "w_star must be a unit vector");
  require(std::isfinite(sigma_eps_) && sigma_eps_ >= 0.0, ErrorKind::Contract,
          "sigma_eps must be finite and >= 0");
}

double TaskSpec::link_cdf(double u) const {
  switch (link_) {
    case Link::Logistic: return 1.0 / (1.0 + std::exp(-u));
    case Link::Probit: return 0.5 * std::erfc(-u / std::sqrt(2.0));
  }
  return 0.5;
}

// ---------------------------------------------------------------------------
// Masks

DiagMask DiagMask::complement() const {
  DiagMask out{bits};
  for (auto& b : out.bits) b = static_cast<std::uint8_t>(1 - b);
  return out;
}

VectorXd DiagMask::diagonal() const {
  VectorXd out(d());
  for (int i = 0; i < d(); ++i) out(i) = bits[i];
  return out;
}

MatrixXd DiagMask::apply(const MatrixXd& x) const {
  require(x.rows() == d(), ErrorKind::Dimension, "mask and data dimension differ");
  MatrixXd out = x;
  for (int i = 0; i < d(); ++i)
    if (!bits[i]) out.row(i).setZero();
  return out;
}

MatrixXd DiagMask::apply_complement(const MatrixXd& x) const {
  require(x.rows() == d(), ErrorKind::Dimension, "mask and data dimension differ");
  MatrixXd out = x;
  for (int i = 0; i < d(); ++i)
    if (bits[i]) out.row(i).setZero();
  return out;
}

DiagMask DiagMask::from_code(int d, std::uint64_t code) {
  require(d >= 1 && d <= 63, ErrorKind::Dimension, "mask enumeration supports 1 <= d <= 63");
  DiagMask m;
  m.bits.resize(d);
  for (int i = 0; i < d; ++i) m.bits[i] = static_cast<std::uint8_t>((code >> i) & 1U);
  return m;
}

// ---------------------------------------------------------------------------
// Samplers

MatrixXd sample_uniform_orthobasis(int d, int r, Seed seed) {
  require(d >= 1 && r >= 1, ErrorKind::Dimension, "dimensions must be positive");
  require(r <= d, ErrorKind::Dimension, "orthobasis requires r <= d");
  Rng rng(seed);
  const MatrixXd g = rng.gaussian(d, r);
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(d, r);
  const MatrixXd& packed = qr.matrixQR();
  for (int j = 0; j < r; ++j)
    if (packed(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

SampleBatch sample_spiked(const SpikedModel& model, int n, Seed seed) {
  require(n >= 1, ErrorKind::Dimension, "n must be >= 1");
  Rng rng(seed);
  SampleBatch batch;
  batch.seed = seed;
  batch.z = model.nu() * rng.gaussian(model.r(), n);
  batch.xi = model.sigma().asDiagonal() * rng.gaussian(model.d(), n);
  batch.x = model.u_star() * batch.z + batch.xi;
  return batch;
}

LabeledBatch sample_mixture(const MixtureModel& gmm, std::span<const int> counts, Seed seed) {
  const int k = gmm.num_classes();
  require(static_cast<int>(counts.size()) == k, ErrorKind::Dimension,
          "counts must have one entry per class");
  int total = 0;
  for (int c : counts) {
    require(c >= 0, ErrorKind::Contract, "counts must be nonnegative");
    total += c;
  }
  require(total >= 1, ErrorKind::Contract, "at least one count must be positive");

  Rng rng(seed);
  LabeledBatch out;
  out.x.resize(gmm.d(), total);
  out.labels.reserve(total);
  out.counts.assign(counts.begin(), counts.end());
  int col = 0;
  for (int cls = 0; cls < k; ++cls) {
    const VectorXd sd = gmm.covs[cls].cwiseSqrt();
    const MatrixXd noise = sd.asDiagonal() * rng.gaussian(gmm.d(), counts[cls]);
    out.x.middleCols(col, counts[cls]) = noise.colwise() + gmm.means[cls];
    out.labels.insert(out.labels.end(), counts[cls], cls);
    col += counts[cls];
  }
  return out;
}

RegressionBatch sample_regression_task(const SpikedModel& model, const VectorXd& w_t, int m,
                                       Seed seed) {
  require(w_t.size() == model.r(), ErrorKind::Dimension, "w_t must have length r");
  require(std::abs(w_t.norm() - 1.0) <= 1e-12, ErrorKind::Contract, "w_t must be a unit vector");
  require(model.nu() != 0.0, ErrorKind::DivisionByZero, "labels divide by nu, which is zero");
  SampleBatch s = sample_spiked(model, m, seed);
  RegressionBatch out;
  out.y = (s.z.transpose() * w_t) / model.nu();
  out.x = std::move(s.x);
  out.z = std::move(s.z);
  return out;
}

DiagMask random_mask(int d, Rng& rng) {
  require(d >= 1, ErrorKind::Dimension, "d must be >= 1");
  DiagMask m;
  m.bits.resize(d);
  for (int i = 0; i < d; ++i) m.bits[i] = rng.bernoulli_half() ? 1 : 0;
  return m;
}

DiagMask random_mask(int d, Seed seed) {
  Rng rng(seed);
  return random_mask(d, rng);
}

}  // namespace contrastlab
