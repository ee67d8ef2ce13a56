#include <benchmark/benchmark.h>

#include <random>

#include "costcal/calibrate/linalg.hpp"

using namespace costcal::calibrate;

namespace {

Matrix random_matrix(std::size_t m, std::size_t v) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 100);
  Matrix c(m, v);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < v; ++j) c(i, j) = u(rng);
  return c;
}

void BM_LeastSquares(benchmark::State& state) {
  auto c = random_matrix(static_cast<std::size_t>(state.range(0)), 6);
  std::vector<double> t(c.rows(), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(least_squares(c, t));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LeastSquares)->RangeMultiplier(4)->Range(64, 4096)->Complexity(benchmark::oN);

void BM_ColumnRank(benchmark::State& state) {
  auto c = random_matrix(275, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(column_rank(c).rank);
}
BENCHMARK(BM_ColumnRank)->DenseRange(2, 10, 4);

}  // namespace
