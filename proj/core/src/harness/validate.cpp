#include "contrastlab/harness/validate.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "contrastlab/datagen.hpp"
#include "contrastlab/error.hpp"
#include "contrastlab/metrics.hpp"

namespace contrastlab::harness {

namespace {

std::vector<DiagMask> all_masks(int d) {
  std::vector<DiagMask> masks;
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << d); ++code)
    masks.push_back(DiagMask::from_code(d, code));
  return masks;
}

MatrixXd random_orthogonal(int r, Seed seed) { return sample_uniform_orthobasis(r, r, seed); }

VectorXd uniform_sigma(int d, double lo, double hi, Seed seed) {
  Rng rng(seed);
  VectorXd s(d);
  for (int i = 0; i < d; ++i) s(i) = lo + (hi - lo) * rng.uniform();
  return s;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Runs one property, converting exceptions to failures and timing it.
PropertyVerdict run_property(const std::string& name,
                             const std::function<bool(std::string&)>& body) {
  PropertyVerdict v;
  v.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    v.passed = body(v.detail);
  } catch (const std::exception& e) {
    v.passed = false;
    v.detail = std::string("threw: ") + e.what();
  }
  v.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return v;
}

constexpr LossKind kAllKinds[] = {LossKind::SelfCon, LossKind::SupConHybrid, LossKind::HsicTransfer,
                                  LossKind::Autoencoder, LossKind::MaskedAutoencoder};

bool sin_theta_definitions(Seed seed, std::string& detail) {
  const int d = 8, r = 3;
  double worst = 0.0;
  bool spectral_ok = true;
  for (int t = 0; t < 1000; ++t) {
    const MatrixXd u1 = sample_uniform_orthobasis(d, r, derive_seed(seed, {1, std::uint64_t(t)}));
    const MatrixXd u2 = sample_uniform_orthobasis(d, r, derive_seed(seed, {2, std::uint64_t(t)}));
    const double f = sin_theta(u1, u2).value;
    worst = std::max({worst, std::abs(f - sin_theta_complement(u1, u2)),
                      std::abs(f - sin_theta_projector(u1, u2))});
    const double s = sin_theta(u1, u2, SubspaceNorm::Spectral).value;
    spectral_ok = spectral_ok && s <= f + 1e-12 && s <= 1.0 + 1e-12;
  }
  detail = "max disagreement " + format_double(worst);
  return worst <= 1e-8 && spectral_ok;
}

bool sin_theta_axioms(Seed seed, std::string& detail) {
  const int d = 8, r = 3;
  const double root_r = std::sqrt(static_cast<double>(r));
  int violations = 0;
  double worst_invariance = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto st = static_cast<std::uint64_t>(t);
    const MatrixXd u1 = sample_uniform_orthobasis(d, r, derive_seed(seed, {3, st}));
    const MatrixXd u2 = sample_uniform_orthobasis(d, r, derive_seed(seed, {4, st}));
    const MatrixXd u3 = sample_uniform_orthobasis(d, r, derive_seed(seed, {5, st}));
    const double d12 = sin_theta(u1, u2).value;
    const double d21 = sin_theta(u2, u1).value;
    const double d13 = sin_theta(u1, u3).value;
    const double d23 = sin_theta(u2, u3).value;
    if (std::abs(d12 - d21) > 1e-10) ++violations;
    if (d12 < 0.0 || d12 > root_r + 1e-12) ++violations;
    if (sin_theta(u1, u1).value > 1e-6) ++violations;
    if (d12 > d13 + d23 + 1e-10) ++violations;
    const MatrixXd o1 = random_orthogonal(r, derive_seed(seed, {6, st}));
    const MatrixXd o2 = random_orthogonal(r, derive_seed(seed, {7, st}));
    worst_invariance = std::max(worst_invariance, std::abs(sin_theta(u1 * o1, u2 * o2).value - d12));
  }
  detail = std::to_string(violations) + " violations, right-invariance error " +
           format_double(worst_invariance);
  return violations == 0 && worst_invariance <= 1e-10;
}

bool incoherence_bound(Seed seed, std::string& detail) {
  const int r = 4;
  bool ok = true;
  std::ostringstream os;
  for (int d : {32, 64, 128}) {
    double mean = 0.0;
    for (int t = 0; t < 200; ++t)
      mean += incoherence(sample_uniform_orthobasis(d, r, derive_seed(seed, {8, std::uint64_t(d), std::uint64_t(t)})));
    mean /= 200.0;
    const double bound = 10.0 * r / d * std::log(static_cast<double>(d));
    ok = ok && mean <= bound;
    os << "d=" << d << ": " << format_double(mean) << " <= " << format_double(bound) << "; ";
  }
  detail = os.str();
  return ok;
}

bool delta_norm_bound(Seed seed, std::string& detail) {
  Rng rng(derive_seed(seed, {9}));
  double worst_ratio = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int d = 2 + static_cast<int>(rng.uniform() * 9.0);
    const MatrixXd m = rng.gaussian(d, d);
    const DiagSplit sp = split_diagonal(m);
    const double lhs = Eigen::JacobiSVD<MatrixXd>(sp.offdiag).singularValues()(0);
    const double rhs = Eigen::JacobiSVD<MatrixXd>(m).singularValues()(0);
    worst_ratio = std::max(worst_ratio, lhs / rhs);
  }
  detail = "max ||Delta(M)||/||M|| = " + format_double(worst_ratio);
  return worst_ratio <= 2.0 + 1e-12;
}

bool mask_expectation(Seed seed, std::string& detail) {
  double worst = 0.0;
  for (int d : {4, 6, 8}) {
    Rng rng(derive_seed(seed, {10, std::uint64_t(d)}));
    const MatrixXd x = rng.gaussian(d, 7);
    MatrixXd mean = MatrixXd::Zero(d, d);
    const auto masks = all_masks(d);
    for (const DiagMask& a : masks) mean += augmented_pair_matrix(a.apply(x), a.apply_complement(x)).m;
    mean /= static_cast<double>(masks.size());
    worst = std::max(worst, (mean - 0.5 * masking_expectation_matrix(x).m).norm());
  }
  detail = "max Frobenius error " + format_double(worst);
  return worst <= 1e-10;
}

bool gradient_checks(Seed seed, std::string& detail) {
  double worst = 0.0;
  for (LossKind kind : kAllKinds) {
    for (int t = 0; t < 3; ++t) {
      OracleInstance inst = make_oracle_instance(kind, 6, 2, 12, derive_seed(seed, {11, std::uint64_t(kind), std::uint64_t(t)}));
      // A handful of masks keeps the finite differences cheap.
      if (!inst.data.masks.empty()) inst.data.masks.resize(5);
      const MatrixXd w = default_init(inst.r, 6, derive_seed(seed, {12, std::uint64_t(t)})) * 3.0;
      if (kind == LossKind::Autoencoder || kind == LossKind::MaskedAutoencoder)
        inst.data.decoder = default_init(inst.r, 6, derive_seed(seed, {13, std::uint64_t(t)})).transpose();
      const MatrixXd g = loss_gradient(inst.spec, w, inst.data);
      const MatrixXd fd = finite_diff_gradient(inst.spec, w, inst.data, 1e-5);
      worst = std::max(worst, (g - fd).norm() / std::max(g.norm(), 1e-300));
    }
  }
  detail = "max relative error " + format_double(worst);
  return worst <= 1e-5;
}

bool loss_rotation_invariance(Seed seed, std::string& detail) {
  double worst = 0.0;
  for (LossKind kind : {LossKind::SelfCon, LossKind::SupConHybrid, LossKind::HsicTransfer}) {
    OracleInstance inst = make_oracle_instance(kind, 6, 3, 12, derive_seed(seed, {14, std::uint64_t(kind)}));
    inst.data.masks.resize(4);
    const MatrixXd w = default_init(3, 6, derive_seed(seed, {15}));
    const MatrixXd o = random_orthogonal(3, derive_seed(seed, {16}));
    const double a = eval_loss(inst.spec, w, inst.data).value;
    const double b = eval_loss(inst.spec, o * w, inst.data).value;
    worst = std::max(worst, std::abs(a - b));
  }
  detail = "max |L(OW) - L(W)| = " + format_double(worst);
  return worst <= 1e-10;
}

bool gd_equivalence(Seed seed, const EigenSolver& solver, std::string& detail) {
  double worst = 0.0;
  std::string worst_kind;
  for (LossKind kind : kAllKinds) {
    for (int t = 0; t < 2; ++t) {
      const OracleInstance inst =
          make_oracle_instance(kind, 6, 2, 40, derive_seed(seed, {17, std::uint64_t(kind), std::uint64_t(t)}));
      const OracleResult res = gd_spectral_check(inst, derive_seed(seed, {18, std::uint64_t(t)}), solver);
      if (!(res.sin_theta <= worst)) {
        worst = res.sin_theta;
        worst_kind = std::string(to_string(kind));
      }
    }
  }
  detail = "max sin-theta " + format_double(worst) + (worst_kind.empty() ? "" : " (" + worst_kind + ")");
  return worst <= 1e-3;
}

bool risk_closed_form_vs_mc(Seed seed, std::string& detail) {
  const int d = 10, r = 2;
  double worst_z = 0.0;
  for (int t = 0; t < 3; ++t) {
    const auto st = static_cast<std::uint64_t>(t);
    const SpikedModel model(sample_uniform_orthobasis(d, r, derive_seed(seed, {19, st})), 1.0,
                            uniform_sigma(d, 0.5, 1.5, derive_seed(seed, {20, st})));
    const VectorXd w_star = sample_uniform_orthobasis(r, 1, derive_seed(seed, {21, st})).col(0);
    const TaskSpec task(w_star / w_star.norm(), 0.3);
    const MatrixXd u = sample_uniform_orthobasis(d, r, derive_seed(seed, {22, st}));
    const RiskReport closed = regression_excess_risk(u, model, task);
    const VectorXd w = optimal_probe_weight(u, model, task);
    const RiskReport mc = regression_risk_mc(u, w, model, task, 200000, derive_seed(seed, {23, st}));
    worst_z = std::max(worst_z, std::abs(mc.absolute_risk - closed.absolute_risk) / mc.absolute_std_error);
  }
  detail = "max |closed - MC| / SE = " + format_double(worst_z);
  return worst_z <= 3.0;
}

bool excess_nonnegative(Seed seed, std::string& detail) {
  const int d = 10, r = 3;
  // Isotropic noise: the U*-probe is then the best linear predictor overall.
  const double level = uniform_sigma(1, 0.5, 2.0, derive_seed(seed, {25}))(0);
  const SpikedModel model(sample_uniform_orthobasis(d, r, derive_seed(seed, {24})), 1.0,
                          VectorXd::Constant(d, level));
  const VectorXd w_star = sample_uniform_orthobasis(r, 1, derive_seed(seed, {26})).col(0);
  const TaskSpec task(w_star / w_star.norm(), 0.0);
  double lowest = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const MatrixXd u = sample_uniform_orthobasis(d, r, derive_seed(seed, {27, std::uint64_t(t)}));
    lowest = std::min(lowest, regression_excess_risk(u, model, task).excess_risk);
  }
  detail = "min excess " + format_double(lowest);
  return lowest >= -1e-10;
}

}  // namespace

bool ValidationReport::all_passed() const {
  for (const PropertyVerdict& v : verdicts)
    if (!v.passed) return false;
  return true;
}

std::string ValidationReport::format() const {
  std::ostringstream os;
  for (const PropertyVerdict& v : verdicts) {
    char ms[32];
    std::snprintf(ms, sizeof ms, "%.1f", v.wall_ms);
    os << (v.passed ? "PASS " : "FAIL ") << v.name << " (" << ms << " ms) " << v.detail << '\n';
  }
  return os.str();
}

ValidationReport validate_suite(Seed seed) { return validate_suite(seed, EigenSolver(dense_top_r)); }

ValidationReport validate_suite(Seed seed, const EigenSolver& solver) {
  ValidationReport rep;
  auto add = [&](const std::string& name, const std::function<bool(std::string&)>& body) {
    rep.verdicts.push_back(run_property(name, body));
  };
  add("sin-theta-definitions", [&](std::string& s) { return sin_theta_definitions(seed, s); });
  add("sin-theta-axioms", [&](std::string& s) { return sin_theta_axioms(seed, s); });
  add("incoherence-bound", [&](std::string& s) { return incoherence_bound(seed, s); });
  add("delta-norm-bound", [&](std::string& s) { return delta_norm_bound(seed, s); });
  add("mask-expectation-identity", [&](std::string& s) { return mask_expectation(seed, s); });
  add("gradient-check", [&](std::string& s) { return gradient_checks(seed, s); });
  add("loss-rotation-invariance", [&](std::string& s) { return loss_rotation_invariance(seed, s); });
  add("gd-spectral-equivalence", [&](std::string& s) { return gd_equivalence(seed, solver, s); });
  add("risk-closed-form-vs-mc", [&](std::string& s) { return risk_closed_form_vs_mc(seed, s); });
  add("excess-risk-nonnegative", [&](std::string& s) { return excess_nonnegative(seed, s); });
  return rep;
}

OracleInstance make_oracle_instance(LossKind kind, int d, int r, int n, Seed seed) {
  require(d >= 2 && d <= 10, ErrorKind::Contract, "oracle instances need 2 <= d <= 10");
  require(r >= 1 && r < d, ErrorKind::Contract, "oracle instances need 1 <= r < d");
  require(n >= 2, ErrorKind::Contract, "oracle instances need n >= 2");
  OracleInstance inst;
  inst.r = r;
  inst.spec.kind = kind;
  const SpikedModel model(sample_uniform_orthobasis(d, r, derive_seed(seed, {0})), 3.0,
                          uniform_sigma(d, 0.2, 1.0, derive_seed(seed, {1})));
  const MatrixXd x = sample_spiked(model, n, derive_seed(seed, {2})).x;

  switch (kind) {
    case LossKind::SelfCon:
      inst.data.x = x;
      inst.data.masks = all_masks(d);
      inst.target = SymTarget{masking_expectation_matrix(x).m / (4.0 * n), TargetKind::SelfconMasking};
      break;
    case LossKind::SupConHybrid: {
      const int k = r + 1;
      const MixtureModel gmm = make_mixture(d, r, 3.0, uniform_sigma(d, 0.2, 1.0, derive_seed(seed, {3})),
                                            std::vector<double>(k, 1.0 / k), derive_seed(seed, {4}));
      const std::vector<int> counts(k, std::max(2, n / (2 * k)));
      inst.data.class_blocks = sample_mixture(gmm, counts, derive_seed(seed, {5})).blocks();
      inst.data.x = x;
      inst.data.masks = all_masks(d);
      Rng rng(derive_seed(seed, {6}));
      for (int c = 0; c < k; ++c) inst.spec.alpha.push_back(0.5 + rng.uniform());
      inst.target = supcon_hybrid_matrix(x, inst.data.class_blocks, inst.spec.alpha);
      break;
    }
    case LossKind::HsicTransfer: {
      inst.data.x = x;
      inst.data.masks = all_masks(d);
      const MatrixXd q = sample_uniform_orthobasis(r, r, derive_seed(seed, {7}));
      for (int t = 0; t < std::min(r, 2); ++t) {
        const RegressionBatch b = sample_regression_task(model, q.col(t), std::max(2, n / 2),
                                                         derive_seed(seed, {8, std::uint64_t(t)}));
        inst.data.tasks.push_back(LabeledTask{b.x, b.y});
        inst.spec.alpha.push_back(0.5 * (t + 1));
      }
      inst.target = transfer_hybrid_matrix(x, inst.data.tasks, inst.spec.alpha);
      break;
    }
    case LossKind::Autoencoder:
      inst.data.x = x;
      inst.target = pca_matrix(x);
      break;
    case LossKind::MaskedAutoencoder:
      inst.data.x = x;
      inst.data.masks = all_masks(d);
      inst.target = masked_ae_matrix(x);
      break;
  }
  return inst;
}

MatrixXd row_space(const MatrixXd& w) {
  Eigen::JacobiSVD<MatrixXd> svd(w, Eigen::ComputeThinV);
  return svd.matrixV().leftCols(w.rows());
}

OracleResult gd_spectral_check(const OracleInstance& inst, Seed seed, const EigenSolver& solver) {
  const int d = inst.data.dim();
  const MatrixXd init = default_init(inst.r, d, derive_seed(seed, {0}));
  GDConfig cfg;
  cfg.step_size = 10.0 * default_step_size(inst.spec, inst.data);
  cfg.max_iters = 200000;
  cfg.grad_tol = 1e-11 / cfg.step_size;
  cfg.seed = derive_seed(seed, {1});
  const MinimizeResult res = minimize(inst.spec, inst.data, init, cfg);
  const EigenBasis eb = top_r_eigenbasis(inst.target, inst.r, solver);
  OracleResult out;
  out.sin_theta = sin_theta(row_space(res.w), eb.basis).value;
  out.iterations = res.iterations;
  out.final_grad_norm = res.final_grad_norm;
  return out;
}

}  // namespace contrastlab::harness
