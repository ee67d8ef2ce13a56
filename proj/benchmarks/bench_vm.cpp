#include <benchmark/benchmark.h>

#include "costcal/calibrate/suite.hpp"
#include "costcal/predict/predict.hpp"
#include "costcal/vm/machine.hpp"

using namespace costcal;

namespace {

const calibrate::CalibrationProgram& workload(const std::string& id) {
  for (const auto& b : predict::benchmark_suite())
    if (b.workload.id() == id) return b.workload;
  throw std::runtime_error(id);
}

void BM_NrevCounted(benchmark::State& state) {
  const auto& w = workload("nrev");
  auto g = w.goal(calibrate::gen_input(w.rule(), static_cast<int>(state.range(0)), 1));
  vm::Machine m(w.program());
  for (auto _ : state) benchmark::DoNotOptimize(m.solve(g).success);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_NrevCounted)->RangeMultiplier(2)->Range(8, 128)->Complexity(benchmark::oNSquared);

void BM_NrevUncounted(benchmark::State& state) {
  const auto& w = workload("nrev");
  auto g = w.goal(calibrate::gen_input(w.rule(), static_cast<int>(state.range(0)), 1));
  vm::Machine m(w.program());
  for (auto _ : state) benchmark::DoNotOptimize(m.run(g));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_NrevUncounted)->RangeMultiplier(2)->Range(8, 128)->Complexity(benchmark::oNSquared);

void BM_PreparedRerun(benchmark::State& state) {
  const auto& w = workload("hanoi");
  auto g = w.goal(calibrate::gen_input(w.rule(), static_cast<int>(state.range(0)), 1));
  vm::Machine m(w.program());
  auto prepared = m.prepare(g);
  for (auto _ : state) benchmark::DoNotOptimize(prepared.run());
}
BENCHMARK(BM_PreparedRerun)->DenseRange(4, 12, 4);

}  // namespace
