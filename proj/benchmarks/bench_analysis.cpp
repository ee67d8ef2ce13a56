#include <benchmark/benchmark.h>

#include "costcal/analysis/analyzer.hpp"
#include "costcal/predict/predict.hpp"

using namespace costcal;

namespace {

// Full analysis from a fresh session, as a user running `analyze` pays it.
void BM_AnalyzeBenchmark(benchmark::State& state) {
  const auto& b = predict::benchmark_suite()[static_cast<std::size_t>(state.range(0))];
  const auto& w = b.workload;
  auto model = predict::with_builtins(analysis::CostModel::all_head(), w.program(), w.entry());
  for (auto _ : state) {
    auto fs = analysis::predicate_cost(w.program(), w.entry(), model, analysis::Bound::Exact);
    benchmark::DoNotOptimize(fs.size());
  }
  state.SetLabel(w.id());
}
BENCHMARK(BM_AnalyzeBenchmark)->DenseRange(0, 5);

void BM_EvalCostLargeSize(benchmark::State& state) {
  const auto& w = predict::benchmark_suite()[1].workload;  // nrev
  auto f = w.costs(analysis::CostModel::step_only())[0];
  std::vector<std::int64_t> sizes{state.range(0), 0};
  for (auto _ : state) benchmark::DoNotOptimize(analysis::eval_cost(f, sizes));
}
BENCHMARK(BM_EvalCostLargeSize)->Arg(10)->Arg(1000)->Arg(100000);

}  // namespace
