#include "contrastlab/rng.hpp"

namespace contrastlab {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Seed derive_seed(Seed base, std::initializer_list<std::uint64_t> indices) noexcept {
  std::uint64_t h = mix64(base);
  for (std::uint64_t i : indices) h = mix64(h ^ mix64(i + 0x632be59bd9b4e019ULL));
  return h;
}

Eigen::MatrixXd Rng::gaussian(Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd out(rows, cols);
  // column-major fill so a given (seed, shape) always yields the same matrix
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = normal_(engine_);
  return out;
}

}  // namespace contrastlab
