// Serial reference kernels against their OpenMP counterparts, plus the cost
// of building the main filters from a shared spectral cache.

#include <benchmark/benchmark.h>

#include <random>

#include "wclmmse/filters.hpp"
#include "wclmmse/kernels.hpp"

namespace {

using namespace wclmmse;

Matrix random_samples(Index rows, Index cols) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> dist;
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) out(i, j) = dist(rng);
  }
  return out;
}

void BM_GramSerial(benchmark::State& state) {
  const Matrix z = random_samples(4000, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::gram(z));
}

void BM_GramParallel(benchmark::State& state) {
  const Matrix z = random_samples(4000, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::gram(z));
}

void BM_ResidualSerial(benchmark::State& state) {
  const Index m = state.range(0);
  const Matrix z = random_samples(20000, m + 7);
  const Matrix a = random_samples(7, m);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::residual_norms_sq(a, z));
}

void BM_ResidualParallel(benchmark::State& state) {
  const Index m = state.range(0);
  const Matrix z = random_samples(20000, m + 7);
  const Matrix a = random_samples(7, m);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::residual_norms_sq(a, z));
}

template <FilterKind Kind>
void BM_Filter(benchmark::State& state) {
  const Index m = state.range(0);
  const CovarianceModel model = synthetic_model(7, m, GeometricSpectrum{1.0, 0.98}, 3);
  const SpectralCache cache(model);
  const Index l = m / 8;
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_filter(model, cache, Kind, l).matrix);
  }
}

}  // namespace

BENCHMARK(BM_GramSerial)->Arg(128)->Arg(512);
BENCHMARK(BM_GramParallel)->Arg(128)->Arg(512);
BENCHMARK(BM_ResidualSerial)->Arg(256)->Arg(1024);
BENCHMARK(BM_ResidualParallel)->Arg(256)->Arg(1024);
BENCHMARK(BM_Filter<FilterKind::wiener>)->Arg(256)->Arg(800);
BENCHMARK(BM_Filter<FilterKind::jpc>)->Arg(256)->Arg(800);
BENCHMARK(BM_Filter<FilterKind::lsjpc>)->Arg(256)->Arg(800);
BENCHMARK(BM_Filter<FilterKind::lrw>)->Arg(256)->Arg(800);

BENCHMARK_MAIN();
