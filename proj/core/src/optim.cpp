#include "contrastlab/optim.hpp"

#include <cmath>
#include <optional>

#include "contrastlab/error.hpp"

namespace contrastlab {

namespace {

constexpr double kDivergenceThreshold = 1e12;

bool is_contrastive(LossKind k) {
  return k == LossKind::SelfCon || k == LossKind::SupConHybrid || k == LossKind::HsicTransfer;
}

bool is_autoencoder(LossKind k) {
  return k == LossKind::Autoencoder || k == LossKind::MaskedAutoencoder;
}

bool uses_masks(const LossSpec& spec, const LossData& data) {
  if (spec.kind == LossKind::MaskedAutoencoder || spec.kind == LossKind::SelfCon) return true;
  return is_contrastive(spec.kind) && data.x.cols() > 0;
}

// Fraction of masks on which coordinates i and j land in different views.
MatrixXd split_frequency(const std::vector<DiagMask>& masks, int d) {
  MatrixXd p = MatrixXd::Zero(d, d);
  for (const DiagMask& a : masks) {
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) p(i, j) += (a.bits[i] != a.bits[j]) ? 1.0 : 0.0;
  }
  return p / static_cast<double>(masks.size());
}

void check_masks(const std::vector<DiagMask>& masks, int d) {
  require(!masks.empty(), ErrorKind::Contract, "loss needs at least one mask in LossData::masks");
  for (const DiagMask& a : masks)
    require(a.d() == d, ErrorKind::Dimension, "mask dimension differs from data dimension");
}

void check_bundle(const LossSpec& spec, const MatrixXd& w, const LossData& data) {
  spec.validate();
  const int d = data.dim();
  require(d >= 1, ErrorKind::Contract, "loss data is empty");
  require(w.cols() == d, ErrorKind::Dimension, "W must be r x d");
  require(w.rows() >= 1, ErrorKind::Dimension, "W must have at least one row");
  switch (spec.kind) {
    case LossKind::SelfCon:
      require(data.x.cols() >= 1, ErrorKind::Contract, "SelfCon needs unlabeled samples");
      break;
    case LossKind::SupConHybrid:
      require(data.class_blocks.size() >= 2, ErrorKind::NoNegatives,
              "SupConHybrid needs at least two class blocks");
      require(spec.alpha.size() == data.class_blocks.size(), ErrorKind::Contract,
              "alpha must have one weight per class block");
      for (const MatrixXd& b : data.class_blocks) {
        require(b.rows() == d, ErrorKind::Dimension, "class block dimension differs");
        require(b.cols() >= 2, ErrorKind::WithinClassContrast, "each class needs n_k >= 2");
      }
      break;
    case LossKind::HsicTransfer:
      require(data.x.cols() >= 1, ErrorKind::Contract, "HsicTransfer needs unlabeled samples");
      require(spec.alpha.size() == data.tasks.size(), ErrorKind::Contract,
              "alpha must have one weight per task");
      for (const LabeledTask& t : data.tasks) {
        require(t.x.rows() == d, ErrorKind::Dimension, "task dimension differs");
        require(t.y.size() == t.x.cols(), ErrorKind::Dimension, "task labels misaligned");
        require(t.x.cols() >= 2, ErrorKind::CenteringDegeneracy, "each task needs m >= 2");
      }
      break;
    case LossKind::Autoencoder:
    case LossKind::MaskedAutoencoder:
      require(data.x.cols() >= 1, ErrorKind::Contract, "autoencoder needs samples");
      require(data.decoder.rows() == d && data.decoder.cols() == w.rows(), ErrorKind::Contract,
              "autoencoder bundle needs a d x r decoder");
      break;
  }
  if (uses_masks(spec, data)) check_masks(data.masks, d);
}

// Contrastive part built from the Gram matrix and the mask split pattern:
// X1 X2^T + X2 X1^T = P o G, and X1 + X2 = X for every mask.
MatrixXd selfcon_form(const MatrixXd& gram, const VectorXd& col_sum, long n,
                      const MatrixXd& split) {
  MatrixXd s = split.cwiseProduct(gram);
  if (n >= 2) s -= (col_sum * col_sum.transpose() - gram) / (2.0 * (n - 1));
  return s / (2.0 * n);
}

// Supervised and HSIC parts, which do not depend on masks.
MatrixXd label_form(const LossSpec& spec, const LossData& data) {
  const int d = data.dim();
  MatrixXd s = MatrixXd::Zero(d, d);
  if (spec.kind == LossKind::SupConHybrid) {
    const int k = static_cast<int>(data.class_blocks.size());
    std::vector<VectorXd> sums;
    long total = 0;
    for (const MatrixXd& b : data.class_blocks) {
      sums.push_back(b.rowwise().sum());
      total += b.cols();
    }
    for (int c = 0; c < k; ++c) {
      const MatrixXd& b = data.class_blocks[c];
      const double nk = static_cast<double>(b.cols());
      MatrixXd within = sums[c] * sums[c].transpose() - b * b.transpose();
      VectorXd rest = VectorXd::Zero(d);
      for (int t = 0; t < k; ++t)
        if (t != c) rest += sums[t];
      const MatrixXd outer = sums[c] * rest.transpose();
      const MatrixXd cross = 0.5 * (outer + outer.transpose());
      s += spec.alpha[c] / (k * nk) *
           (within / (nk - 1.0) - cross / static_cast<double>(total - b.cols()));
    }
  } else if (spec.kind == LossKind::HsicTransfer) {
    for (std::size_t t = 0; t < data.tasks.size(); ++t) {
      const LabeledTask& task = data.tasks[t];
      const double m = static_cast<double>(task.x.cols());
      const VectorXd v = task.x * (task.y.array() - task.y.mean()).matrix();
      s += spec.alpha[t] / ((m - 1.0) * (m - 1.0)) * (v * v.transpose());
    }
  }
  return s;
}

double quadratic_loss(const MatrixXd& s, const MatrixXd& w, double lambda) {
  const MatrixXd wtw = w.transpose() * w;
  return -(s.cwiseProduct(wtw)).sum() + 0.5 * lambda * wtw.squaredNorm();
}

MatrixXd quadratic_gradient(const MatrixXd& s, const MatrixXd& w, double lambda) {
  return -2.0 * w * s + 2.0 * lambda * w * (w.transpose() * w);
}

// Gram the autoencoder kinds reconstruct: centered for the plain AE, and the
// mask-averaged same-view Gram (scaled by 1/2) for the masked AE.
MatrixXd autoencoder_gram(const LossSpec& spec, const LossData& data) {
  const long n = data.x.cols();
  if (spec.kind == LossKind::Autoencoder) {
    const MatrixXd c = data.x.colwise() - data.x.rowwise().mean();
    return (c * c.transpose()) / static_cast<double>(n);
  }
  const MatrixXd same = MatrixXd::Ones(data.dim(), data.dim()) -
                        split_frequency(data.masks, data.dim());
  return same.cwiseProduct(data.x * data.x.transpose()) / (2.0 * n);
}

double autoencoder_loss(const MatrixXd& gram, const MatrixXd& w, const MatrixXd& dec) {
  const MatrixXd resid = MatrixXd::Identity(gram.rows(), gram.cols()) - dec * w;
  return (resid * gram).cwiseProduct(resid).sum();
}

// Per-sample contrastive loss for one mask: -pos/n + neg/(4n(n-1)).
double selfcon_sample_loss(const MatrixXd& w, const MatrixXd& x, const DiagMask& a,
                           bool& empty_negatives) {
  const long n = x.cols();
  const MatrixXd z = w * x;
  const MatrixXd z1 = w * a.apply(x);
  const MatrixXd z2 = z - z1;
  const double pos = z1.cwiseProduct(z2).sum();
  double value = -pos / static_cast<double>(n);
  if (n >= 2) {
    const VectorXd total = z.rowwise().sum();
    const double neg = total.squaredNorm() - z.squaredNorm();
    value += neg / (4.0 * n * (n - 1.0));
  } else {
    empty_negatives = true;
  }
  return value;
}

double supcon_sample_loss(const LossSpec& spec, const MatrixXd& w, const LossData& data) {
  const int k = static_cast<int>(data.class_blocks.size());
  std::vector<VectorXd> proj_sums;
  std::vector<double> self_norms;
  long total = 0;
  for (const MatrixXd& b : data.class_blocks) {
    const MatrixXd z = w * b;
    proj_sums.push_back(z.rowwise().sum());
    self_norms.push_back(z.squaredNorm());
    total += b.cols();
  }
  double loss = 0.0;
  for (int c = 0; c < k; ++c) {
    const double nk = static_cast<double>(data.class_blocks[c].cols());
    const double within = proj_sums[c].squaredNorm() - self_norms[c];
    double cross = 0.0;
    for (int s = 0; s < k; ++s)
      if (s != c) cross += proj_sums[c].dot(proj_sums[s]);
    const double others = static_cast<double>(total) - nk;
    loss -= spec.alpha[c] / (k * nk) * (within / (nk - 1.0) - cross / others);
  }
  return loss;
}

double hsic_sample_loss(const LossSpec& spec, const MatrixXd& w, const LossData& data) {
  double loss = 0.0;
  for (std::size_t t = 0; t < data.tasks.size(); ++t) {
    const LabeledTask& task = data.tasks[t];
    const double m = static_cast<double>(task.x.cols());
    // tr(K H L H) with K = X^T W^T W X and L = y y^T equals ||W X H y||^2
    const VectorXd hy = task.y.array() - task.y.mean();
    const double hsic = (w * (task.x * hy)).squaredNorm() / ((m - 1.0) * (m - 1.0));
    loss -= spec.alpha[t] * hsic;
  }
  return loss;
}

}  // namespace

std::string_view to_string(LossKind kind) noexcept {
  switch (kind) {
    case LossKind::SelfCon: return "selfcon";
    case LossKind::SupConHybrid: return "supcon-hybrid";
    case LossKind::HsicTransfer: return "hsic-transfer";
    case LossKind::Autoencoder: return "autoencoder";
    case LossKind::MaskedAutoencoder: return "masked-autoencoder";
  }
  return "unknown";
}

void LossSpec::validate() const {
  require(lambda > 0.0 && std::isfinite(lambda), ErrorKind::Contract, "lambda must be positive");
  for (double a : alpha)
    require(a >= 0.0 && std::isfinite(a), ErrorKind::Contract, "alpha entries must be >= 0");
}

void GDConfig::validate() const {
  require(step_size > 0.0 && std::isfinite(step_size), ErrorKind::Contract,
          "step_size must be positive");
  require(max_iters >= 1, ErrorKind::Contract, "max_iters must be >= 1");
  require(grad_tol >= 0.0, ErrorKind::Contract, "grad_tol must be >= 0");
}

int LossData::dim() const {
  if (x.cols() > 0 || x.rows() > 0) return static_cast<int>(x.rows());
  if (!class_blocks.empty()) return static_cast<int>(class_blocks.front().rows());
  if (!tasks.empty()) return static_cast<int>(tasks.front().x.rows());
  return 0;
}

LossValue eval_loss(const LossSpec& spec, const MatrixXd& w, const LossData& data) {
  check_bundle(spec, w, data);
  LossValue out;
  if (is_autoencoder(spec.kind)) {
    const long n = data.x.cols();
    if (spec.kind == LossKind::Autoencoder) {
      const MatrixXd c = data.x.colwise() - data.x.rowwise().mean();
      out.value = (c - data.decoder * (w * c)).squaredNorm() / static_cast<double>(n);
    } else {
      double acc = 0.0;
      for (const DiagMask& a : data.masks) {
        const MatrixXd v1 = a.apply(data.x);
        const MatrixXd v2 = data.x - v1;
        acc += (v1 - data.decoder * (w * v1)).squaredNorm() +
               (v2 - data.decoder * (w * v2)).squaredNorm();
      }
      out.value = acc / (2.0 * n * static_cast<double>(data.masks.size()));
    }
    return out;
  }

  double loss = 0.0;
  if (data.x.cols() > 0) {
    double acc = 0.0;
    for (const DiagMask& a : data.masks) acc += selfcon_sample_loss(w, data.x, a, out.empty_negatives);
    loss += acc / static_cast<double>(data.masks.size());
  }
  if (spec.kind == LossKind::SupConHybrid) loss += supcon_sample_loss(spec, w, data);
  if (spec.kind == LossKind::HsicTransfer) loss += hsic_sample_loss(spec, w, data);
  loss += 0.5 * spec.lambda * (w * w.transpose()).squaredNorm();
  out.value = loss;
  return out;
}

MatrixXd loss_quadratic_form(const LossSpec& spec, const LossData& data) {
  require(is_contrastive(spec.kind), ErrorKind::Contract,
          "quadratic form is defined for the contrastive kinds only");
  const int d = data.dim();
  MatrixXd s = label_form(spec, data);
  if (data.x.cols() > 0) {
    check_masks(data.masks, d);
    const MatrixXd gram = data.x * data.x.transpose();
    s += selfcon_form(gram, data.x.rowwise().sum(), data.x.cols(), split_frequency(data.masks, d));
  }
  return 0.5 * (s + s.transpose());
}

MatrixXd loss_gradient(const LossSpec& spec, const MatrixXd& w, const LossData& data) {
  check_bundle(spec, w, data);
  if (is_autoencoder(spec.kind)) {
    const MatrixXd gram = autoencoder_gram(spec, data);
    const MatrixXd resid = MatrixXd::Identity(gram.rows(), gram.cols()) - data.decoder * w;
    return -2.0 * data.decoder.transpose() * resid * gram;
  }
  return quadratic_gradient(loss_quadratic_form(spec, data), w, spec.lambda);
}

MatrixXd decoder_gradient(const LossSpec& spec, const MatrixXd& w, const LossData& data) {
  check_bundle(spec, w, data);
  require(is_autoencoder(spec.kind), ErrorKind::Contract, "decoder gradient needs an autoencoder kind");
  const MatrixXd gram = autoencoder_gram(spec, data);
  const MatrixXd resid = MatrixXd::Identity(gram.rows(), gram.cols()) - data.decoder * w;
  return -2.0 * resid * gram * w.transpose();
}

MatrixXd finite_diff_gradient(const LossSpec& spec, const MatrixXd& w, const LossData& data,
                              double h) {
  require(h > 0.0, ErrorKind::Contract, "finite-difference step must be positive");
  MatrixXd g(w.rows(), w.cols());
  MatrixXd probe = w;
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      const double orig = probe(i, j);
      probe(i, j) = orig + h;
      const double up = eval_loss(spec, probe, data).value;
      probe(i, j) = orig - h;
      const double down = eval_loss(spec, probe, data).value;
      probe(i, j) = orig;
      g(i, j) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

MatrixXd default_init(int r, int d, Seed seed) {
  require(r >= 1 && d >= 1, ErrorKind::Dimension, "init dimensions must be positive");
  Rng rng(seed);
  return rng.gaussian(r, d) / std::sqrt(static_cast<double>(d));
}

double default_step_size(const LossSpec& spec, const LossData& data) {
  auto spectral_norm = [](const MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  };
  double norm = 0.0;
  const long n = data.x.cols();
  if (spec.kind == LossKind::Autoencoder) {
    const MatrixXd c = data.x.colwise() - data.x.rowwise().mean();
    norm = spectral_norm(c * c.transpose()) / static_cast<double>(n);
  } else if (spec.kind == LossKind::MaskedAutoencoder) {
    norm = spectral_norm(data.x * data.x.transpose()) / static_cast<double>(n);
  } else if (spec.mask_policy == MaskPolicy::Resample && n > 0) {
    // Bound on ||S_A|| that holds for every mask A.
    const MatrixXd gram = data.x * data.x.transpose();
    const VectorXd s = data.x.rowwise().sum();
    double self = spectral_norm(gram);
    if (n >= 2) self += spectral_norm(s * s.transpose() - gram) / (2.0 * (n - 1));
    norm = spectral_norm(label_form(spec, data)) + self / (2.0 * n);
  } else {
    norm = spectral_norm(loss_quadratic_form(spec, data));
  }
  require(norm > 0.0, ErrorKind::Contract, "data matrix is zero; no natural step size");
  return 1e-2 / norm;
}

MinimizeResult minimize(const LossSpec& spec, const LossData& data, const MatrixXd& init,
                        const GDConfig& cfg) {
  cfg.validate();
  require(init.norm() > 0.0, ErrorKind::Contract, "W = 0 is stationary; init must be nonzero");

  LossData bundle = data;
  const bool resample = spec.mask_policy == MaskPolicy::Resample && uses_masks(spec, data);
  const int d = bundle.dim();
  if (is_autoencoder(spec.kind) && bundle.decoder.size() == 0) bundle.decoder = init.transpose();
  if (resample && bundle.masks.empty()) bundle.masks.push_back(DiagMask::from_code(d, 0));
  check_bundle(spec, init, bundle);

  Rng mask_rng(cfg.seed);
  const long n = bundle.x.cols();

  // Data-dependent matrices are built once; under resampling only the
  // mask-dependent split pattern changes per iteration.
  std::optional<MatrixXd> gram;
  VectorXd col_sum;
  MatrixXd fixed_form;
  if (is_contrastive(spec.kind)) {
    if (resample) {
      gram = bundle.x * bundle.x.transpose();
      col_sum = bundle.x.rowwise().sum();
      fixed_form = label_form(spec, bundle);
    } else {
      fixed_form = loss_quadratic_form(spec, bundle);
    }
  } else if (resample) {
    gram = bundle.x * bundle.x.transpose();
  } else {
    fixed_form = autoencoder_gram(spec, bundle);
  }

  MatrixXd w = init;
  MatrixXd dec = bundle.decoder;
  MinimizeResult res;
  res.trace.reserve(static_cast<std::size_t>(std::min<long>(cfg.max_iters + 1, 1 << 20)));

  auto current_matrix = [&]() -> MatrixXd {
    if (!resample) return fixed_form;
    const DiagMask a = random_mask(d, mask_rng);
    MatrixXd split(d, d);
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) split(i, j) = (a.bits[i] != a.bits[j]) ? 1.0 : 0.0;
    if (is_contrastive(spec.kind)) {
      MatrixXd s = fixed_form + selfcon_form(*gram, col_sum, n, split);
      return 0.5 * (s + s.transpose());
    }
    return (MatrixXd::Ones(d, d) - split).cwiseProduct(*gram) / (2.0 * n);
  };

  for (long it = 0;; ++it) {
    const MatrixXd m = current_matrix();
    double loss;
    MatrixXd gw;
    MatrixXd gd;
    if (is_contrastive(spec.kind)) {
      loss = quadratic_loss(m, w, spec.lambda);
      gw = quadratic_gradient(m, w, spec.lambda);
    } else {
      loss = autoencoder_loss(m, w, dec);
      const MatrixXd resid = MatrixXd::Identity(d, d) - dec * w;
      gw = -2.0 * dec.transpose() * resid * m;
      gd = -2.0 * resid * m * w.transpose();
    }
    if (!std::isfinite(loss) || std::abs(loss) > kDivergenceThreshold)
      throw DivergenceError(it, loss);
    res.trace.push_back(loss);

    const double gnorm = std::sqrt(gw.squaredNorm() + (gd.size() ? gd.squaredNorm() : 0.0));
    res.final_grad_norm = gnorm;
    if (gnorm <= cfg.grad_tol) {
      res.converged = true;
      break;
    }
    if (it == cfg.max_iters) break;
    w -= cfg.step_size * gw;
    if (gd.size()) dec -= cfg.step_size * gd;
    res.iterations = it + 1;
  }
  res.w = std::move(w);
  if (is_autoencoder(spec.kind)) res.decoder = std::move(dec);
  return res;
}

}  // namespace contrastlab
