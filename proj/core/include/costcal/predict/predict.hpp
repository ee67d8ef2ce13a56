#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "costcal/analysis/analyzer.hpp"
#include "costcal/calibrate/calibrate.hpp"
#include "costcal/calibrate/suite.hpp"

namespace costcal::predict {

/// K . C. Throws Input when the lengths differ.
double predict_time(const std::vector<double>& k, const std::vector<double>& c);
/// K . (eval_cost of each function at `sizes`).
double predict_time(const std::vector<double>& k,
                    const std::vector<analysis::CostFunction>& costs,
                    const std::vector<std::int64_t>& sizes);

/// 100 |estimate - observed| / observed. Requires observed > 0.
double relative_error(double estimate, double observed);
/// Root mean square of the errors. Requires a nonempty list.
double global_error(const std::vector<double>& errors);

/// Ascending by S; ties go to the model with fewer components.
std::vector<calibrate::ModelFit> rank_models(std::vector<calibrate::ModelFit> fits);

/// A bundled test program with its default input size.
struct Benchmark {
  calibrate::CalibrationProgram workload;
  int size = 0;
};

const std::vector<calibrate::ProgramSource>& benchmark_sources();
/// append, nrev, hanoi, palindrome, powset, evpol.
const std::vector<Benchmark>& benchmark_suite();

/// `model` extended with the builtin and operator metrics that clauses
/// reachable from `entry` execute (in a fixed order).
analysis::CostModel with_builtins(const analysis::CostModel& model, const lang::Program& p,
                                  const lang::PredKey& entry);

struct Protocol {
  int inputs = 10;          // random inputs per program
  int runs = 5;             // timed runs per input
  std::uint64_t seed = 1;
  bool include_builtins = true;
  double min_loop_ns = 20000;
  int size = 0;             // overrides every benchmark's size when > 0
  calibrate::Timer timer;   // defaults to vm::profile
};

struct Estimate {
  std::string label;        // head-metric signature of the model
  analysis::CostModel model;  // as evaluated, builtins included
  double estimate_ns = 0;
  double error_pct = 0;
};

struct ProgramReport {
  std::string id;
  int size = 0;
  std::vector<std::int64_t> sizes;
  double observed_ns = 0;   // mean over inputs x runs
  double analysis_s = 0;    // static analysis time
  std::vector<Estimate> estimates;
};

struct AccuracyReport {
  std::vector<std::string> models;  // labels, in evaluation order
  std::vector<ProgramReport> programs;
  std::vector<double> global_error_pct;  // aligned with models
  std::vector<std::string> ranking;      // labels by ascending global error
  std::uint64_t seed = 0;
  std::string host;
};

/// Observes every benchmark (timing) and predicts it under every model.
AccuracyReport evaluate(const std::vector<Benchmark>& suite,
                        const calibrate::PlatformProfile& profile,
                        const std::vector<analysis::CostModel>& models,
                        const Protocol& protocol = {});

std::string render_table(const AccuracyReport& r);
std::string to_json(const AccuracyReport& r);

}  // namespace costcal::predict
