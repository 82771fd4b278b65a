#pragma once

#include <cstdint>
#include <cstring>
#include <string>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "contrastlab/datagen.hpp"
#include "contrastlab/error.hpp"
#include "contrastlab/rng.hpp"

namespace testing_util {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline VectorXd uniform_vector(int d, double lo, double hi, contrastlab::Seed seed) {
  contrastlab::Rng rng(seed);
  VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = lo + (hi - lo) * rng.uniform();
  return v;
}

inline MatrixXd random_symmetric(int d, contrastlab::Seed seed) {
  contrastlab::Rng rng(seed);
  const MatrixXd g = rng.gaussian(d, d);
  return 0.5 * (g + g.transpose());
}

inline VectorXd unit_vector(int r, contrastlab::Seed seed) {
  contrastlab::Rng rng(seed);
  VectorXd v(r);
  for (int i = 0; i < r; ++i) v(i) = rng.normal();
  return v / v.norm();
}

inline contrastlab::SpikedModel random_model(int d, int r, double nu, double lo, double hi,
                                             contrastlab::Seed seed) {
  return contrastlab::SpikedModel(
      contrastlab::sample_uniform_orthobasis(d, r, contrastlab::derive_seed(seed, {0})), nu,
      uniform_vector(d, lo, hi, contrastlab::derive_seed(seed, {1})));
}

inline std::uint64_t hash_matrix(const MatrixXd& m) {
  std::uint64_t h = 1469598103934665603ull;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = m.data()[i];
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h = (h ^ bits) * 1099511628211ull;
  }
  return h;
}

/// Runs body and returns the kind of the contrastlab::Error it throws.
template <class F>
::testing::AssertionResult throws_kind(F&& body, contrastlab::ErrorKind expected) {
  try {
    body();
  } catch (const contrastlab::Error& e) {
    if (e.kind() == expected) return ::testing::AssertionSuccess();
    return ::testing::AssertionFailure()
           << "threw kind " << contrastlab::to_string(e.kind()) << ": " << e.what();
  }
  return ::testing::AssertionFailure() << "did not throw";
}

}  // namespace testing_util
