#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "rootopt/calibration.hpp"
#include "rootopt/matrix.hpp"
#include "rootopt/optimizers.hpp"
#include "rootopt/orthogonalize.hpp"
#include "rootopt/robustify.hpp"

namespace {

using namespace rootopt;

DenseMatrix gaussian(std::size_t rows, std::size_t cols) {
  std::mt19937_64 rng(rows * 7919 + cols);
  return DenseMatrix::gaussian(rows, cols, rng);
}

void shape_args(benchmark::internal::Benchmark* b) {
  for (auto [r, c] : {std::pair{64, 64}, {128, 512}, {256, 256}, {256, 1024}}) b->Args({r, c});
}

void BM_NsOrthogonalize(benchmark::State& state) {
  const DenseMatrix m = gaussian(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(ns_orthogonalize(m, kMuonCoefficients));
  state.SetLabel("T=5");
}
BENCHMARK(BM_NsOrthogonalize)->Apply(shape_args)->Unit(benchmark::kMicrosecond);

void BM_PolarFactorSvd(benchmark::State& state) {
  const DenseMatrix m = gaussian(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(polar_factor(m));
}
BENCHMARK(BM_PolarFactorSvd)->Apply(shape_args)->Unit(benchmark::kMillisecond);

void BM_DecomposeQuantile(benchmark::State& state) {
  const DenseMatrix m = gaussian(state.range(0), state.range(1));
  const auto policy = ThresholdPolicy::quantile(0.9);
  for (auto _ : state) benchmark::DoNotOptimize(decompose(m, policy));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.size()));
}
BENCHMARK(BM_DecomposeQuantile)->Apply(shape_args)->Unit(benchmark::kMicrosecond);

void BM_RootStep(benchmark::State& state) {
  const DenseMatrix g = gaussian(state.range(0), state.range(1));
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::Root;
  ParamState s;
  DenseMatrix p(g.rows(), g.cols());
  for (auto _ : state) root_step(cfg, s, p, g, 1e-6);
}
BENCHMARK(BM_RootStep)->Apply(shape_args)->Unit(benchmark::kMicrosecond);

void BM_NewtonLossAndGradient(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::vector<SpectralSample> samples;
  for (int i = 0; i < 8; ++i) {
    samples.push_back(SpectralSample::from_matrix(DenseMatrix::gaussian(state.range(0), state.range(1), rng),
                                                  SampleOrigin::Synthetic));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(newton_loss(kMuonCoefficients, samples));
    benchmark::DoNotOptimize(loss_gradient(kMuonCoefficients, samples));
  }
}
BENCHMARK(BM_NewtonLossAndGradient)->Args({256, 256})->Args({256, 2048})->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
