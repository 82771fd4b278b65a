#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "contrastlab/harness/validate.hpp"
#include "contrastlab/metrics.hpp"
#include "contrastlab/optim.hpp"
#include "contrastlab/spectral.hpp"
#include "helpers.hpp"

namespace {

using namespace contrastlab;
using testing_util::throws_kind;

MatrixXd sym_outer(const VectorXd& a, const VectorXd& b) {
  return 0.5 * (a * b.transpose() + b * a.transpose());
}

double spectral_norm(const MatrixXd& m) { return Eigen::JacobiSVD<MatrixXd>(m).singularValues()(0); }

TEST(SplitDiagonal, Identity) {
  const DiagSplit s = split_diagonal(MatrixXd::Identity(3, 3));
  EXPECT_EQ(s.diag, MatrixXd::Identity(3, 3));
  EXPECT_EQ(s.offdiag, MatrixXd::Zero(3, 3));
}

TEST(SplitDiagonal, AllOnes) {
  const DiagSplit s = split_diagonal(MatrixXd::Ones(3, 3));
  EXPECT_EQ(s.diag, MatrixXd::Identity(3, 3));
  EXPECT_EQ(s.offdiag, MatrixXd::Ones(3, 3) - MatrixXd::Identity(3, 3));
}

TEST(SplitDiagonal, PartsSumExactlyAndOffDiagonalNormBounded) {
  for (Seed s = 0; s < 50; ++s) {
    contrastlab::Rng rng(s);
    const MatrixXd m = rng.gaussian(5, 5);
    const DiagSplit sp = split_diagonal(m);
    EXPECT_TRUE(((sp.diag + sp.offdiag).array() == m.array()).all());
    EXPECT_LE(spectral_norm(sp.offdiag), 2.0 * spectral_norm(m) + 1e-12);
  }
}

TEST(SplitDiagonal, RejectsNonSquare) {
  EXPECT_TRUE(throws_kind([] { split_diagonal(MatrixXd::Zero(2, 3)); }, ErrorKind::Dimension));
}

TEST(AugmentedPair, ZeroInputs) {
  EXPECT_EQ(augmented_pair_matrix(MatrixXd::Zero(3, 4), MatrixXd::Zero(3, 4)).m, MatrixXd::Zero(3, 3));
}

TEST(AugmentedPair, HandEvaluation) {
  const MatrixXd got = augmented_pair_matrix(MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 2)).m;
  MatrixXd want(2, 2);
  want << 0.0, -0.5, -0.5, 0.0;
  EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AugmentedPair, SymmetricAndProvenanceTagged) {
  contrastlab::Rng rng(2);
  const SymTarget t = augmented_pair_matrix(rng.gaussian(5, 9), rng.gaussian(5, 9));
  EXPECT_LE((t.m - t.m.transpose()).norm(), 1e-12);
  EXPECT_EQ(t.provenance, TargetKind::SelfconAugpair);
  EXPECT_EQ(to_string(t.provenance), "selfcon-augpair");
}

TEST(AugmentedPair, Errors) {
  EXPECT_TRUE(throws_kind([] { augmented_pair_matrix(MatrixXd::Zero(2, 1), MatrixXd::Zero(2, 1)); },
                          ErrorKind::ContrastDegeneracy));
  EXPECT_TRUE(throws_kind([] { augmented_pair_matrix(MatrixXd::Zero(2, 3), MatrixXd::Zero(3, 3)); },
                          ErrorKind::Dimension));
}

TEST(MaskingExpectation, HandEvaluation) {
  const MatrixXd got = masking_expectation_matrix(MatrixXd::Identity(2, 2)).m;
  MatrixXd want(2, 2);
  want << 0.0, -1.0, -1.0, 0.0;
  EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-15);
}

// Every mask enumerated: the expectation over Bernoulli(1/2) bits is exact.
TEST(MaskingExpectation, EqualsTwiceExhaustiveMaskAverage) {
  for (int d = 2; d <= 10; ++d) {
    contrastlab::Rng rng(100 + d);
    const MatrixXd x = rng.gaussian(d, 6);
    MatrixXd mean = MatrixXd::Zero(d, d);
    const std::uint64_t count = std::uint64_t{1} << d;
    for (std::uint64_t code = 0; code < count; ++code) {
      const DiagMask a = DiagMask::from_code(d, code);
      mean += augmented_pair_matrix(a.apply(x), a.apply_complement(x)).m;
    }
    mean /= static_cast<double>(count);
    EXPECT_LE((masking_expectation_matrix(x).m - 2.0 * mean).norm(), 1e-10) << "d = " << d;
  }
}

TEST(MaskingExpectation, SingleNonzeroRow) {
  MatrixXd x = MatrixXd::Zero(4, 5);
  x.row(2) << 1.0, -2.0, 0.5, 3.0, 1.5;
  const double n = 5.0;
  const MatrixXd j = MatrixXd::Ones(5, 5) - MatrixXd::Identity(5, 5);
  const MatrixXd want = -(1.0 / (n - 1.0)) * x * j * x.transpose();
  EXPECT_LE((masking_expectation_matrix(x).m - want).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(MaskingExpectation, ScaleEquivariance) {
  contrastlab::Rng rng(9);
  const MatrixXd x = rng.gaussian(8, 30);
  const MatrixXd base = masking_expectation_matrix(x).m;
  for (double c : {-3.0, 0.25, 7.0}) {
    const SymTarget scaled = masking_expectation_matrix(c * x);
    EXPECT_LE((scaled.m - c * c * base).norm(), 1e-12 * c * c * base.norm());
    const MatrixXd u0 = top_r_eigenbasis(masking_expectation_matrix(x), 3).basis;
    const MatrixXd u1 = top_r_eigenbasis(scaled, 3).basis;
    EXPECT_LE(sin_theta_projector(u0, u1), 1e-10);
  }
}

TEST(MaskingExpectation, RequiresTwoSamples) {
  EXPECT_TRUE(throws_kind([] { masking_expectation_matrix(MatrixXd::Ones(3, 1)); },
                          ErrorKind::ContrastDegeneracy));
}

TEST(Pca, ConstantColumnsGiveZero) {
  MatrixXd x(3, 4);
  x.colwise() = VectorXd::LinSpaced(3, 1.0, 3.0);
  EXPECT_LE(pca_matrix(x).m.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Pca, HandEvaluation) {
  MatrixXd x(2, 2);
  x << 1.0, -1.0, 0.0, 0.0;
  MatrixXd want = MatrixXd::Zero(2, 2);
  want(0, 0) = 2.0;
  EXPECT_LE((pca_matrix(x).m - want).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Pca, MeanZeroDataGivesGram) {
  contrastlab::Rng rng(4);
  MatrixXd x = rng.gaussian(4, 10);
  x = x.colwise() - x.rowwise().mean();
  EXPECT_LE((pca_matrix(x).m - x * x.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MaskedAe, DiagonalGramIsUnchanged) {
  MatrixXd x = MatrixXd::Zero(3, 3);
  x.diagonal() << 1.0, 2.0, -3.0;
  EXPECT_LE((masked_ae_matrix(x).m - x * x.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((masked_ae_matrix(MatrixXd::Identity(2, 2)).m - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(),
            1e-15);
}

TEST(MaskedAe, HalvesOffDiagonal) {
  contrastlab::Rng rng(5);
  const MatrixXd x = rng.gaussian(4, 7);
  const MatrixXd g = x * x.transpose();
  const MatrixXd m = masked_ae_matrix(x).m;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(m(i, j), i == j ? g(i, j) : 0.5 * g(i, j), 1e-12);
}

TEST(MaskedAe, MatchesGradientDescentMinimizer) {
  const auto inst = harness::make_oracle_instance(LossKind::MaskedAutoencoder, 7, 2, 40, 77);
  const auto res = harness::gd_spectral_check(inst, 78, EigenSolver(dense_top_r));
  EXPECT_LE(res.sin_theta, 1e-3);
}

// O(n^2) loop over labeled pairs; no vectorized sums.
MatrixXd supervised_pair_oracle(const std::vector<MatrixXd>& blocks, const std::vector<double>& alpha) {
  const int k = static_cast<int>(blocks.size());
  const int d = static_cast<int>(blocks.front().rows());
  long total = 0;
  for (const MatrixXd& b : blocks) total += b.cols();
  MatrixXd s = MatrixXd::Zero(d, d);
  for (int c = 0; c < k; ++c) {
    const MatrixXd& bc = blocks[c];
    const double nc = static_cast<double>(bc.cols());
    MatrixXd within = MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < bc.cols(); ++i)
      for (Eigen::Index j = 0; j < bc.cols(); ++j)
        if (i != j) within += bc.col(i) * bc.col(j).transpose();
    MatrixXd cross = MatrixXd::Zero(d, d);
    for (int t = 0; t < k; ++t) {
      if (t == c) continue;
      for (Eigen::Index i = 0; i < bc.cols(); ++i)
        for (Eigen::Index j = 0; j < blocks[t].cols(); ++j) cross += sym_outer(bc.col(i), blocks[t].col(j));
    }
    s += alpha[c] / (k * nc) * (within / (nc - 1.0) - cross / static_cast<double>(total - bc.cols()));
  }
  return s;
}

TEST(SupconHybrid, ZeroWeightsLeaveSelfSupervisedPart) {
  contrastlab::Rng rng(6);
  const MatrixXd x = rng.gaussian(5, 12);
  const std::vector<MatrixXd> blocks{rng.gaussian(5, 3), rng.gaussian(5, 4), rng.gaussian(5, 2)};
  const std::vector<double> alpha(3, 0.0);
  const MatrixXd want = masking_expectation_matrix(x).m / (4.0 * 12);
  EXPECT_LE((supcon_hybrid_matrix(x, blocks, alpha).m - want).norm(), 1e-14);
}

TEST(SupconHybrid, RepeatedVectorsHandEvaluation) {
  VectorXd v1(3), v2(3);
  v1 << 1.0, 2.0, 0.0;
  v2 << -1.0, 0.5, 2.0;
  const std::vector<MatrixXd> blocks{v1.replicate(1, 3), v2.replicate(1, 5)};
  const std::vector<double> alpha{1.0, 1.0};
  const MatrixXd got = supcon_hybrid_matrix(MatrixXd(3, 0), blocks, alpha).m;
  const MatrixXd want = 0.5 * (v1 - v2) * (v1 - v2).transpose();
  EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LE((got - supervised_pair_oracle(blocks, alpha)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(SupconHybrid, MatchesPairLoopOracle) {
  contrastlab::Rng rng(7);
  const std::vector<MatrixXd> blocks{rng.gaussian(4, 3), rng.gaussian(4, 6), rng.gaussian(4, 2),
                                     rng.gaussian(4, 5)};
  const std::vector<double> alpha{0.3, 1.7, 1.0, 2.2};
  const MatrixXd x = rng.gaussian(4, 9);
  const MatrixXd got = supcon_hybrid_matrix(x, blocks, alpha).m;
  const MatrixXd want = masking_expectation_matrix(x).m / 36.0 + supervised_pair_oracle(blocks, alpha);
  EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SupconHybrid, BalancedCaseInvariantUnderClassRelabeling) {
  contrastlab::Rng rng(8);
  std::vector<MatrixXd> blocks{rng.gaussian(5, 4), rng.gaussian(5, 4), rng.gaussian(5, 4)};
  const std::vector<double> alpha(3, 1.3);
  const MatrixXd x = rng.gaussian(5, 6);
  const MatrixXd base = supcon_hybrid_matrix(x, blocks, alpha).m;
  std::vector<MatrixXd> perm{blocks[2], blocks[0], blocks[1]};
  EXPECT_LE((supcon_hybrid_matrix(x, perm, alpha).m - base).norm(), 1e-12);
}

TEST(SupconHybrid, LargerWeightRaisesSupervisedShare) {
  contrastlab::Rng rng(10);
  const std::vector<MatrixXd> blocks{rng.gaussian(5, 6), rng.gaussian(5, 6), rng.gaussian(5, 6)};
  const MatrixXd x = rng.gaussian(5, 20);
  const MatrixXd self = masking_expectation_matrix(x).m / 80.0;
  double prev = 0.0;
  for (double a : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const std::vector<double> alpha(3, a);
    const MatrixXd sup = supcon_hybrid_matrix(x, blocks, alpha).m - self;
    const double share = sup.norm() / (sup.norm() + self.norm());
    EXPECT_GT(share, prev);
    prev = share;
  }
}

TEST(SupconHybrid, AgreesWithLossQuadraticForm) {
  const auto inst = harness::make_oracle_instance(LossKind::SupConHybrid, 6, 2, 30, 5);
  const MatrixXd s = loss_quadratic_form(inst.spec, inst.data);
  EXPECT_LE((s - inst.target.m).norm(), 1e-12 * std::max(1.0, s.norm()));
}

TEST(SupconHybrid, Errors) {
  const std::vector<double> one{1.0};
  const std::vector<double> two{1.0, 1.0};
  const std::vector<MatrixXd> single{MatrixXd::Ones(3, 4)};
  const std::vector<MatrixXd> thin{MatrixXd::Ones(3, 4), MatrixXd::Ones(3, 1)};
  EXPECT_TRUE(throws_kind([&] { supcon_hybrid_matrix(MatrixXd(3, 0), single, one); }, ErrorKind::NoNegatives));
  EXPECT_TRUE(throws_kind([&] { supcon_hybrid_matrix(MatrixXd(3, 0), thin, two); },
                          ErrorKind::WithinClassContrast));
}

TEST(Hsic, ConstantLabelsGiveZero) {
  contrastlab::Rng rng(11);
  EXPECT_EQ(hsic_cross_matrix(rng.gaussian(4, 10), VectorXd::Constant(10, 2.5)).m.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Hsic, CentredFirstRowLabelsArePsdRankOne) {
  contrastlab::Rng rng(12);
  MatrixXd xh = rng.gaussian(5, 15);
  xh = xh.colwise() - xh.rowwise().mean();
  const VectorXd y = xh.row(0).transpose();
  const MatrixXd got = hsic_cross_matrix(xh, y).m;
  const VectorXd v = xh * y;
  EXPECT_LE((got - v * v.transpose() / (14.0 * 14.0)).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(got);
  EXPECT_GE(es.eigenvalues()(0), -1e-12);
  EXPECT_LE(es.eigenvalues()(3), 1e-12 * es.eigenvalues()(4));
}

TEST(Hsic, LargeSampleLimit) {
  const int d = 20, r = 3, m = 10000;
  const double nu = 1.5;
  const SpikedModel model = testing_util::random_model(d, r, nu, 0.5, 1.5, 13);
  const double bound = 10.0 * model.sigma().maxCoeff() * nu * std::sqrt(static_cast<double>(d) / m);
  for (Seed rep = 0; rep < 20; ++rep) {
    const VectorXd w = testing_util::unit_vector(r, 200 + rep);
    const RegressionBatch b = sample_regression_task(model, w, m, 300 + rep);
    const VectorXd uw = model.u_star() * w;
    const MatrixXd limit = nu * nu * uw * uw.transpose();
    EXPECT_LE((hsic_cross_matrix(b.x, b.y).m - limit).norm(), bound) << "replicate " << rep;
  }
}

TEST(Hsic, RequiresTwoSamples) {
  EXPECT_TRUE(throws_kind([] { hsic_cross_matrix(MatrixXd::Ones(3, 1), VectorXd::Ones(1)); },
                          ErrorKind::CenteringDegeneracy));
}

TEST(TransferHybrid, NoTasksOrZeroWeightsGiveSelfTarget) {
  contrastlab::Rng rng(14);
  const MatrixXd x = rng.gaussian(6, 11);
  const MatrixXd self = masking_expectation_matrix(x).m / 44.0;
  EXPECT_LE((transfer_hybrid_matrix(x, {}, {}).m - self).norm(), 1e-14);
  const std::vector<LabeledTask> tasks{{rng.gaussian(6, 5), rng.gaussian(5, 1).col(0)}};
  const std::vector<double> zero{0.0};
  EXPECT_LE((transfer_hybrid_matrix(x, tasks, zero).m - self).norm(), 1e-14);
}

TEST(TransferHybrid, DominantSingleTaskAlignsWithItsDirection) {
  const int d = 20, r = 3, reps = 40;
  double mean = 0.0;
  for (Seed s = 0; s < reps; ++s) {
    const SpikedModel model = testing_util::random_model(d, r, 1.0, 1.0, 1.0, 100 + s);
    const VectorXd w = testing_util::unit_vector(r, 200 + s);
    const RegressionBatch b = sample_regression_task(model, w, 10000, 300 + s);
    const MatrixXd x = sample_spiked(model, 200, 400 + s).x;
    const std::vector<LabeledTask> tasks{{b.x, b.y}};
    const std::vector<double> alpha{1e6};
    const MatrixXd u = top_r_eigenbasis(transfer_hybrid_matrix(x, tasks, alpha), 1).basis;
    const VectorXd uw = model.u_star() * w;
    mean += sin_theta(u, uw / uw.norm()).value / reps;
  }
  EXPECT_LE(mean, 0.05);
}

TEST(TransferHybrid, AgreesWithLossQuadraticForm) {
  const auto inst = harness::make_oracle_instance(LossKind::HsicTransfer, 6, 2, 30, 6);
  const MatrixXd s = loss_quadratic_form(inst.spec, inst.data);
  EXPECT_LE((s - inst.target.m).norm(), 1e-12 * std::max(1.0, s.norm()));
}

TEST(TopR, DiagonalCase) {
  MatrixXd m = MatrixXd::Zero(3, 3);
  m.diagonal() << 3.0, 2.0, 1.0;
  const EigenBasis eb = top_r_eigenbasis(SymTarget{m, TargetKind::Pca}, 2);
  EXPECT_NEAR(eb.eigvals(0), 3.0, 1e-14);
  EXPECT_NEAR(eb.eigvals(1), 2.0, 1e-14);
  MatrixXd e12 = MatrixXd::Zero(3, 2);
  e12(0, 0) = e12(1, 1) = 1.0;
  EXPECT_LE(sin_theta(eb.basis, e12).value, 1e-12);
  EXPECT_FALSE(eb.tie);
}

TEST(TopR, RankOneWithSignConvention) {
  VectorXd v(4);
  v << 0.5, -3.0, 1.0, 2.0;
  const EigenBasis eb = top_r_eigenbasis(SymTarget{v * v.transpose(), TargetKind::Pca}, 1);
  EXPECT_NEAR(eb.eigvals(0), v.squaredNorm(), 1e-12);
  // Largest-magnitude entry is positive, so the basis is -v/||v||.
  EXPECT_LE((eb.basis.col(0) + v / v.norm()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TopR, ResidualsOrderAndSignsOnRandomMatrices) {
  for (Seed s = 0; s < 20; ++s) {
    const MatrixXd m = testing_util::random_symmetric(6, s);
    const EigenBasis eb = top_r_eigenbasis(SymTarget{m, TargetKind::Pca}, 4);
    const double norm = spectral_norm(m);
    for (int i = 0; i < 4; ++i) {
      EXPECT_LE((m * eb.basis.col(i) - eb.eigvals(i) * eb.basis.col(i)).norm(), 1e-8 * norm);
      if (i > 0) EXPECT_GE(eb.eigvals(i - 1), eb.eigvals(i));
      Eigen::Index arg;
      eb.basis.col(i).cwiseAbs().maxCoeff(&arg);
      EXPECT_GT(eb.basis(arg, i), 0.0);
    }
    EXPECT_LE((eb.basis.transpose() * eb.basis - MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

// Roots of det(M - t I) for symmetric 3x3 M by the trigonometric method.
std::vector<double> cubic_roots(const MatrixXd& a) {
  const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
  const double q = a.trace() / 3.0;
  const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) +
                    (a(2, 2) - q) * (a(2, 2) - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  const MatrixXd b = (a - q * MatrixXd::Identity(3, 3)) / p;
  const double r = std::clamp(b.determinant() / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double e1 = q + 2.0 * p * std::cos(phi);
  const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  return {e1, 3.0 * q - e1 - e3, e3};
}

TEST(TopR, EigenvaluesMatchCubicRoots) {
  for (Seed s = 0; s < 30; ++s) {
    const MatrixXd m = testing_util::random_symmetric(3, 500 + s);
    const auto roots = cubic_roots(m);
    const EigenBasis eb = top_r_eigenbasis(SymTarget{m, TargetKind::Pca}, 3);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(eb.eigvals(i), roots[i], 1e-10);
  }
}

TEST(TopR, FlagsTies) {
  MatrixXd m = MatrixXd::Identity(4, 4);
  m(0, 0) = 2.0;
  EXPECT_TRUE(top_r_eigenbasis(SymTarget{m, TargetKind::Pca}, 2).tie);
  EXPECT_FALSE(top_r_eigenbasis(SymTarget{m, TargetKind::Pca}, 1).tie);
}

TEST(TopR, Errors) {
  const SymTarget t{MatrixXd::Identity(3, 3), TargetKind::Pca};
  EXPECT_TRUE(throws_kind([&] { top_r_eigenbasis(t, 4); }, ErrorKind::Dimension));
  EXPECT_TRUE(throws_kind([&] { top_r_eigenbasis(t, 0); }, ErrorKind::Dimension));
  MatrixXd bad = MatrixXd::Identity(3, 3);
  bad(1, 1) = std::nan("");
  EXPECT_TRUE(throws_kind([&] { top_r_eigenbasis(SymTarget{bad, TargetKind::Pca}, 1); }, ErrorKind::Numeric));
}

TEST(TopR, InjectedSolverIsUsed) {
  int calls = 0;
  const EigenSolver counting = [&](const MatrixXd& m, int r) {
    ++calls;
    return dense_top_r(m, r);
  };
  top_r_eigenbasis(SymTarget{MatrixXd::Identity(3, 3), TargetKind::Pca}, 1, counting);
  EXPECT_EQ(calls, 1);
}

TEST(Representation, HandEvaluation) {
  MatrixXd m = MatrixXd::Zero(3, 3);
  m.diagonal() << 4.0, 1.0, 0.0;
  const Representation rep = representation_from(SymTarget{m, TargetKind::Pca}, 1);
  MatrixXd want_w = MatrixXd::Zero(1, 3);
  want_w(0, 0) = 2.0;
  EXPECT_LE((rep.w - want_w).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((rep.u - MatrixXd::Identity(3, 1)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_FALSE(rep.nonpositive_spectrum);
}

TEST(Representation, RowSpaceEqualsBasis) {
  for (Seed s = 0; s < 10; ++s) {
    const MatrixXd m = testing_util::random_symmetric(7, 40 + s);
    const Representation rep = representation_from(SymTarget{m, TargetKind::Pca}, 3);
    EXPECT_LE((rep.u.transpose() * rep.u - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-10);
    const MatrixXd off = rep.w * (MatrixXd::Identity(7, 7) - rep.u * rep.u.transpose());
    EXPECT_LE(off.norm(), 1e-8 * std::max(rep.w.norm(), 1e-300));
  }
}

TEST(Representation, ClipsNonpositiveSpectrum) {
  MatrixXd m = MatrixXd::Zero(3, 3);
  m.diagonal() << 1.0, -2.0, -3.0;
  const Representation rep = representation_from(SymTarget{m, TargetKind::Pca}, 2);
  EXPECT_TRUE(rep.nonpositive_spectrum);
  EXPECT_DOUBLE_EQ(rep.singular_values(1), 0.0);
  EXPECT_EQ(rep.u.cols(), 2);
}

TEST(Representation, MaskingBeatsPcaUnderHeteroskedasticNoise) {
  const int d = 40, r = 5, n = 20000;
  VectorXd sigma = VectorXd::Constant(d, 0.5);
  sigma.head(r).setConstant(2.0);
  int wins = 0;
  for (Seed rep = 0; rep < 20; ++rep) {
    const SpikedModel model(sample_uniform_orthobasis(d, r, derive_seed(rep, {1})), 1.0, sigma);
    ASSERT_DOUBLE_EQ(model.rho(), 0.5);
    const MatrixXd x = sample_spiked(model, n, derive_seed(rep, {2})).x;
    const double cl = sin_theta(representation_from(masking_expectation_matrix(x), r).u, model.u_star()).value;
    const double pca = sin_theta(representation_from(pca_matrix(x), r).u, model.u_star()).value;
    wins += cl <= pca;
  }
  EXPECT_GE(wins, 18);
}

TEST(Targets, AllConstructorsAreSymmetric) {
  contrastlab::Rng rng(60);
  const MatrixXd x = rng.gaussian(6, 13);
  const std::vector<MatrixXd> blocks{rng.gaussian(6, 4), rng.gaussian(6, 3)};
  const std::vector<double> alpha{1.0, 2.0};
  const std::vector<LabeledTask> tasks{{rng.gaussian(6, 9), rng.gaussian(9, 1).col(0)}};
  const std::vector<double> talpha{3.0};
  for (const SymTarget& t :
       {augmented_pair_matrix(x, rng.gaussian(6, 13)), masking_expectation_matrix(x), pca_matrix(x),
        masked_ae_matrix(x), supcon_hybrid_matrix(x, blocks, alpha),
        hsic_cross_matrix(tasks[0].x, tasks[0].y), transfer_hybrid_matrix(x, tasks, talpha)}) {
    EXPECT_LE((t.m - t.m.transpose()).norm(), 1e-10 * std::max(t.m.norm(), 1e-300))
        << to_string(t.provenance);
  }
}

}  // namespace
