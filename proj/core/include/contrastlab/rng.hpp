#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

namespace contrastlab {

using Seed = std::uint64_t;

/// splitmix64 finalizer; used to derive independent child seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Deterministic child seed for (base, i, j, ...). Order of indices matters.
Seed derive_seed(Seed base, std::initializer_list<std::uint64_t> indices) noexcept;

/// Thin owner of a seeded engine. No global state anywhere in the library.
class Rng {
 public:
  explicit Rng(Seed seed) : engine_(mix64(seed)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  bool bernoulli_half() { return (engine_() >> 63) != 0; }

  Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace contrastlab
