#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "contrastlab/metrics.hpp"
#include "helpers.hpp"

namespace {

using namespace contrastlab;
using testing_util::throws_kind;

MatrixXd canonical(int d, std::initializer_list<int> cols) {
  MatrixXd u = MatrixXd::Zero(d, static_cast<Eigen::Index>(cols.size()));
  int j = 0;
  for (int c : cols) u(c, j++) = 1.0;
  return u;
}

TEST(SinTheta, IdenticalSubspacesAreAtDistanceZero) {
  const MatrixXd u = sample_uniform_orthobasis(7, 3, 1);
  EXPECT_LE(sin_theta(u, u).value, 1e-6);
  EXPECT_LE(sin_theta(u, u, SubspaceNorm::Spectral).value, 1e-6);
}

TEST(SinTheta, OrthogonalSubspaces) {
  const MatrixXd u1 = canonical(4, {0, 1});
  const MatrixXd u2 = canonical(4, {2, 3});
  EXPECT_NEAR(sin_theta(u1, u2).value, std::sqrt(2.0), 1e-15);
  const SubspaceDistance s = sin_theta(u1, u2, SubspaceNorm::Spectral);
  EXPECT_NEAR(s.value, 1.0, 1e-15);
  EXPECT_EQ(s.norm, SubspaceNorm::Spectral);
}

TEST(SinTheta, DefinitionsAgree) {
  for (Seed t = 0; t < 1000; ++t) {
    const MatrixXd u1 = sample_uniform_orthobasis(8, 3, derive_seed(t, {1}));
    const MatrixXd u2 = sample_uniform_orthobasis(8, 3, derive_seed(t, {2}));
    const double f = sin_theta(u1, u2).value;
    ASSERT_NEAR(f, sin_theta_complement(u1, u2), 1e-8);
    ASSERT_NEAR(f, sin_theta_projector(u1, u2), 1e-8);
    const double s = sin_theta(u1, u2, SubspaceNorm::Spectral).value;
    // Spectral value is the largest singular value of the complement projection.
    const MatrixXd c = (MatrixXd::Identity(8, 8) - u1 * u1.transpose()) * u2;
    ASSERT_NEAR(s, Eigen::JacobiSVD<MatrixXd>(c).singularValues()(0), 1e-10);
  }
}

TEST(SinTheta, MetricAxioms) {
  const double root_r = std::sqrt(3.0);
  for (Seed t = 0; t < 1000; ++t) {
    const MatrixXd a = sample_uniform_orthobasis(8, 3, derive_seed(t, {3}));
    const MatrixXd b = sample_uniform_orthobasis(8, 3, derive_seed(t, {4}));
    const MatrixXd c = sample_uniform_orthobasis(8, 3, derive_seed(t, {5}));
    const double ab = sin_theta(a, b).value;
    ASSERT_NEAR(ab, sin_theta(b, a).value, 1e-10);
    ASSERT_GE(ab, 0.0);
    ASSERT_LE(ab, root_r + 1e-12);
    ASSERT_LE(sin_theta(a, b, SubspaceNorm::Spectral).value, 1.0 + 1e-12);
    ASSERT_LE(ab, sin_theta(a, c).value + sin_theta(b, c).value + 1e-10);
  }
}

TEST(SinTheta, RightInvariance) {
  for (Seed t = 0; t < 200; ++t) {
    const MatrixXd u1 = sample_uniform_orthobasis(9, 4, derive_seed(t, {6}));
    const MatrixXd u2 = sample_uniform_orthobasis(9, 4, derive_seed(t, {7}));
    const MatrixXd o1 = sample_uniform_orthobasis(4, 4, derive_seed(t, {8}));
    const MatrixXd o2 = sample_uniform_orthobasis(4, 4, derive_seed(t, {9}));
    ASSERT_NEAR(sin_theta(u1 * o1, u2 * o2).value, sin_theta(u1, u2).value, 1e-10);
  }
}

TEST(SinTheta, RejectsNonOrthonormalInputWithMeasuredDeviation) {
  MatrixXd bad = canonical(4, {0, 1});
  bad(0, 0) = 1.5;
  try {
    sin_theta(bad, canonical(4, {2, 3}));
    FAIL() << "expected a contract error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Contract);
    EXPECT_NE(std::string(e.what()).find("1.25"), std::string::npos) << e.what();
  }
  EXPECT_TRUE(throws_kind([] { sin_theta(canonical(4, {0}), canonical(4, {1, 2})); }, ErrorKind::Dimension));
}

TEST(Incoherence, HandValues) {
  EXPECT_DOUBLE_EQ(incoherence(canonical(6, {0, 1, 2})), 1.0);
  MatrixXd u(2, 1);
  u << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(incoherence(u), 0.5, 1e-15);
}

TEST(Incoherence, HaarMeanWithinLogBound) {
  const int r = 4;
  for (int d : {32, 64, 128}) {
    double mean = 0.0;
    for (int t = 0; t < 200; ++t) mean += incoherence(sample_uniform_orthobasis(d, r, derive_seed(d, {std::uint64_t(t)})));
    mean /= 200.0;
    EXPECT_LE(mean, 10.0 * r / d * std::log(static_cast<double>(d))) << "d = " << d;
    EXPECT_GE(mean, static_cast<double>(r) / d);
  }
}

TEST(Probe, RidgeShrinkageOnTrueSubspace) {
  // A = (nu^2 + s^2) I and b = nu w*, so w = nu / (nu^2 + s^2) w*.
  for (double nu : {1.0, 1.3, 0.4}) {
    const double s = 0.8;
    const SpikedModel model(sample_uniform_orthobasis(6, 2, 3), nu, VectorXd::Constant(6, s));
    const TaskSpec task(testing_util::unit_vector(2, 4), 0.0);
    const VectorXd w = optimal_probe_weight(model.u_star(), model, task);
    EXPECT_LE((w - nu / (nu * nu + s * s) * task.w_star()).cwiseAbs().maxCoeff(), 1e-12) << "nu = " << nu;
  }
}

TEST(Probe, UnitSignalShrinkage) {
  const double s = 0.8;
  const SpikedModel model(sample_uniform_orthobasis(6, 2, 3), 1.0, VectorXd::Constant(6, s));
  const TaskSpec task(testing_util::unit_vector(2, 4), 0.0);
  const VectorXd w = optimal_probe_weight(model.u_star(), model, task);
  EXPECT_LE((w - 1.0 / (1.0 + s * s) * task.w_star()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Probe, OrthogonalSubspaceGivesZeroWeight) {
  const MatrixXd q = sample_uniform_orthobasis(6, 6, 5);
  const SpikedModel model(q.leftCols(2), 1.0, VectorXd::Constant(6, 0.7));
  const TaskSpec task(testing_util::unit_vector(2, 6), 0.1);
  EXPECT_LE(optimal_probe_weight(q.rightCols(3), model, task).norm(), 1e-12);
}

TEST(Probe, OptimalWeightIsLocallyOptimalUnderMonteCarlo) {
  const SpikedModel model = testing_util::random_model(8, 2, 1.0, 0.5, 1.5, 7);
  const TaskSpec task(testing_util::unit_vector(2, 8), 0.2);
  const MatrixXd u = sample_uniform_orthobasis(8, 2, 9);
  const VectorXd w = optimal_probe_weight(u, model, task);
  const long n = 100000;
  const RiskReport base = regression_risk_mc(u, w, model, task, n, 10);
  for (Seed t = 0; t < 8; ++t) {
    const VectorXd step = 1e-3 * testing_util::unit_vector(2, 20 + t);
    for (double sign : {1.0, -1.0}) {
      // Same seed: common random numbers make the comparison paired.
      const RiskReport moved = regression_risk_mc(u, w + sign * step, model, task, n, 10);
      EXPECT_GE(moved.absolute_risk, base.absolute_risk - 3.0 * base.absolute_std_error / std::sqrt(n));
      EXPECT_GE(probe_risk(u, w + sign * step, model, task), probe_risk(u, w, model, task));
    }
  }
}

TEST(Probe, SingularMomentMatrixIsReported) {
  const MatrixXd q = sample_uniform_orthobasis(5, 5, 11);
  const SpikedModel model(q.leftCols(2), 1.0, VectorXd::Zero(5));
  const TaskSpec task(testing_util::unit_vector(2, 12), 0.0);
  EXPECT_TRUE(throws_kind([&] { optimal_probe_weight(q.rightCols(2), model, task); }, ErrorKind::Singularity));
}

TEST(RegressionRisk, TrueSubspaceHasZeroExcess) {
  const SpikedModel model = testing_util::random_model(10, 3, 1.2, 0.3, 2.0, 13);
  const TaskSpec task(testing_util::unit_vector(3, 14), 0.4);
  const RiskReport rep = regression_excess_risk(model.u_star(), model, task);
  EXPECT_NEAR(rep.excess_risk, 0.0, 1e-14);
  EXPECT_EQ(rep.std_error, 0.0);
  EXPECT_EQ(rep.n_mc, 0);
}

TEST(RegressionRisk, NoiselessFeaturesLeaveOnlyLabelNoise) {
  const SpikedModel model(sample_uniform_orthobasis(6, 2, 15), 1.7, VectorXd::Zero(6));
  const TaskSpec task(testing_util::unit_vector(2, 16), 0.35);
  EXPECT_NEAR(regression_excess_risk(model.u_star(), model, task).absolute_risk, 0.35 * 0.35, 1e-12);
}

TEST(RegressionRisk, ClosedFormMatchesMonteCarlo) {
  for (Seed t = 0; t < 3; ++t) {
    const SpikedModel model = testing_util::random_model(10, 2, 1.0, 0.5, 1.5, 30 + t);
    const TaskSpec task(testing_util::unit_vector(2, 40 + t), 0.3);
    const MatrixXd u = sample_uniform_orthobasis(10, 2, 50 + t);
    const RiskReport closed = regression_excess_risk(u, model, task);
    const RiskReport mc = regression_risk_mc(u, optimal_probe_weight(u, model, task), model, task, 1000000, 60 + t);
    EXPECT_LE(std::abs(mc.absolute_risk - closed.absolute_risk), 3.0 * mc.absolute_std_error);
    EXPECT_LE(std::abs(mc.excess_risk - closed.excess_risk), 3.0 * mc.std_error + 1e-12);
    EXPECT_EQ(mc.n_mc, 1000000);
  }
}

TEST(RegressionRisk, DependsOnlyOnColumnSpace) {
  const SpikedModel model = testing_util::random_model(9, 3, 1.0, 0.4, 1.8, 70);
  const TaskSpec task(testing_util::unit_vector(3, 71), 0.0);
  for (Seed t = 0; t < 50; ++t) {
    const MatrixXd u = sample_uniform_orthobasis(9, 3, derive_seed(t, {72}));
    const MatrixXd o = sample_uniform_orthobasis(3, 3, derive_seed(t, {73}));
    EXPECT_NEAR(regression_excess_risk(u * o, model, task).excess_risk,
                regression_excess_risk(u, model, task).excess_risk, 1e-10);
  }
}

TEST(RegressionRisk, NonnegativeExcessUnderIsotropicNoise) {
  const SpikedModel model(sample_uniform_orthobasis(10, 3, 80), 1.0, VectorXd::Constant(10, 1.3));
  const TaskSpec task(testing_util::unit_vector(3, 81), 0.0);
  for (Seed t = 0; t < 1000; ++t) {
    const MatrixXd u = sample_uniform_orthobasis(10, 3, derive_seed(t, {82}));
    ASSERT_GE(regression_excess_risk(u, model, task).excess_risk, -1e-10);
  }
}

// With unequal noise variances the U*-probe is not the best rank-r linear
// predictor: a low-noise coordinate axis can explain more of y than U* does.
TEST(RegressionRisk, HeteroskedasticNoiseAdmitsNegativeExcess) {
  MatrixXd u_star(2, 1);
  u_star << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  VectorXd sigma(2);
  sigma << 2.0, 0.1;
  const SpikedModel model(u_star, 1.0, sigma);
  const TaskSpec task(VectorXd::Ones(1), 0.0);
  const RiskReport rep = regression_excess_risk(canonical(2, {1}), model, task);
  // risk(U*) = 1 - 1/(1 + 2.005) and risk(e2) = 1 - 0.5/0.51.
  EXPECT_NEAR(rep.excess_risk, 1.0 / 3.005 - 0.5 / 0.51, 1e-12);
  EXPECT_LT(rep.excess_risk, 0.0);
}

TEST(RegressionRisk, SphereMeanAveragesOverCoordinateTasks) {
  const SpikedModel model = testing_util::random_model(12, 3, 1.0, 0.5, 2.0, 90);
  const MatrixXd u = sample_uniform_orthobasis(12, 3, 91);
  double mean = 0.0;
  for (int j = 0; j < 3; ++j) mean += regression_excess_risk(u, model, TaskSpec(VectorXd::Unit(3, j), 0.0)).excess_risk;
  mean /= 3.0;
  EXPECT_NEAR(mean_regression_excess_risk(u, model, 0.0).excess_risk, mean, 1e-12);

  // Sub-sphere of a two-dimensional task subspace.
  const MatrixXd q = sample_uniform_orthobasis(3, 2, 92);
  double sub = 0.0;
  for (int j = 0; j < 2; ++j) sub += regression_excess_risk(u, model, TaskSpec(q.col(j), 0.0)).excess_risk;
  EXPECT_NEAR(mean_regression_excess_risk(u, model, 0.0, q).excess_risk, sub / 2.0, 1e-12);
}

TEST(RegressionRisk, SphereMeanMatchesRandomTaskAverage) {
  const SpikedModel model = testing_util::random_model(10, 3, 1.0, 0.5, 2.0, 93);
  const MatrixXd u = sample_uniform_orthobasis(10, 3, 94);
  const int trials = 20000;
  double sum = 0.0, sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    const double e = regression_excess_risk(u, model, TaskSpec(testing_util::unit_vector(3, 1000 + t), 0.0)).excess_risk;
    sum += e;
    sq += e * e;
  }
  const double mean = sum / trials;
  const double se = std::sqrt((sq / trials - mean * mean) / trials);
  EXPECT_LE(std::abs(mean - mean_regression_excess_risk(u, model, 0.0).excess_risk), 4.0 * se);
}

TEST(ClassificationRisk, TrueSubspaceHasExactlyZeroExcess) {
  const SpikedModel model = testing_util::random_model(8, 2, 1.0, 0.5, 1.5, 100);
  const TaskSpec task(testing_util::unit_vector(2, 101), 0.0, Link::Probit);
  const RiskReport rep = classification_risk(model.u_star(), model, task, 20000, 102);
  EXPECT_EQ(rep.excess_risk, 0.0);
  EXPECT_GT(rep.absolute_risk, 0.0);
  EXPECT_EQ(rep.n_mc, 20000);
}

TEST(ClassificationRisk, OrthogonalSubspaceIsACoinFlip) {
  const MatrixXd q = sample_uniform_orthobasis(6, 6, 103);
  const SpikedModel model(q.leftCols(2), 1.0, VectorXd::Constant(6, 0.8));
  const TaskSpec task(testing_util::unit_vector(2, 104), 0.0);
  const RiskReport rep = classification_risk(q.rightCols(2), model, task, 100000, 105);
  EXPECT_LE(std::abs(rep.absolute_risk - 0.5), 3.0 * rep.absolute_std_error + 1e-12);
}

TEST(ClassificationRisk, DecreasesWithSignalToNoise) {
  const MatrixXd u = sample_uniform_orthobasis(6, 2, 106);
  const TaskSpec task(testing_util::unit_vector(2, 107), 0.0);
  double prev = 1.0;
  for (double nu : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const SpikedModel model(u, nu, VectorXd::Constant(6, 1.0));
    const double risk = classification_risk(u, model, task, 200000, 108).absolute_risk;
    EXPECT_LT(risk, prev) << "nu = " << nu;
    prev = risk;
  }
}

TEST(ClassificationRisk, PositiveScalingOfProbeIsIrrelevant) {
  const SpikedModel model = testing_util::random_model(7, 2, 1.0, 0.5, 1.5, 109);
  const TaskSpec task(testing_util::unit_vector(2, 110), 0.0);
  const MatrixXd u = sample_uniform_orthobasis(7, 2, 111);
  const VectorXd w = testing_util::unit_vector(2, 112);
  const double base = classification_risk_with(u, w, model, task, 50000, 113).absolute_risk;
  for (double c : {1e-3, 0.5, 7.0, 1e4})
    EXPECT_EQ(classification_risk_with(u, c * w, model, task, 50000, 113).absolute_risk, base);
}

TEST(ClassificationRisk, DefaultProbeBeatsRandomDirections) {
  const SpikedModel model = testing_util::random_model(7, 2, 1.0, 0.5, 1.5, 114);
  const TaskSpec task(testing_util::unit_vector(2, 115), 0.0);
  const MatrixXd u = sample_uniform_orthobasis(7, 2, 116);
  const RiskReport best = classification_risk(u, model, task, 200000, 117);
  for (Seed t = 0; t < 5; ++t) {
    const RiskReport other = classification_risk_with(u, testing_util::unit_vector(2, 120 + t), model, task, 200000, 117);
    EXPECT_GE(other.absolute_risk, best.absolute_risk - 3.0 * best.absolute_std_error);
  }
}

TEST(ClassificationRisk, RequiresEnoughSamples) {
  const SpikedModel model = testing_util::random_model(5, 1, 1.0, 0.5, 1.5, 130);
  const TaskSpec task(VectorXd::Ones(1), 0.0);
  EXPECT_TRUE(throws_kind([&] { classification_risk(model.u_star(), model, task, 9999, 0); }, ErrorKind::Contract));
}

}  // namespace
