#include <benchmark/benchmark.h>

#include "contrastlab/datagen.hpp"
#include "contrastlab/metrics.hpp"
#include "contrastlab/optim.hpp"
#include "contrastlab/spectral.hpp"

namespace {

using namespace contrastlab;

MatrixXd spiked_sample(int d, int n) {
  const SpikedModel model(sample_uniform_orthobasis(d, 5, 1), 1.0, VectorXd::Constant(d, 2.0));
  return sample_spiked(model, n, 2).x;
}

void BM_SampleSpiked(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const SpikedModel model(sample_uniform_orthobasis(d, 5, 1), 1.0, VectorXd::Constant(d, 2.0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_spiked(model, 20000, 3).x.data());
}
BENCHMARK(BM_SampleSpiked)->Arg(20)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_MaskingTarget(benchmark::State& state) {
  const MatrixXd x = spiked_sample(static_cast<int>(state.range(0)), 20000);
  for (auto _ : state) benchmark::DoNotOptimize(masking_expectation_matrix(x).m.data());
}
BENCHMARK(BM_MaskingTarget)->Arg(20)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_AugmentedPair(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const MatrixXd x = spiked_sample(d, 20000);
  const DiagMask a = random_mask(d, 4);
  const MatrixXd x1 = a.apply(x), x2 = a.apply_complement(x);
  for (auto _ : state) benchmark::DoNotOptimize(augmented_pair_matrix(x1, x2).m.data());
}
BENCHMARK(BM_AugmentedPair)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_TopR(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const SymTarget t = masking_expectation_matrix(spiked_sample(d, 2000));
  for (auto _ : state) benchmark::DoNotOptimize(top_r_eigenbasis(t, 5).basis.data());
}
BENCHMARK(BM_TopR)->Arg(20)->Arg(80)->Arg(320);

void BM_GradientStep(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  LossData data;
  data.x = spiked_sample(d, 200);
  for (int k = 0; k < 16; ++k) data.masks.push_back(random_mask(d, 10 + k));
  const LossSpec spec;
  const MatrixXd w = default_init(5, d, 5);
  for (auto _ : state) benchmark::DoNotOptimize(loss_gradient(spec, w, data).data());
}
BENCHMARK(BM_GradientStep)->Arg(10)->Arg(40);

void BM_RegressionRisk(benchmark::State& state) {
  const int d = 40;
  const SpikedModel model(sample_uniform_orthobasis(d, 5, 1), 1.0, VectorXd::Constant(d, 2.0));
  const MatrixXd u = sample_uniform_orthobasis(d, 5, 6);
  for (auto _ : state) benchmark::DoNotOptimize(mean_regression_excess_risk(u, model, 0.0).excess_risk);
}
BENCHMARK(BM_RegressionRisk);

}  // namespace

BENCHMARK_MAIN();
