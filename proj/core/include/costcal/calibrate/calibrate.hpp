#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "costcal/analysis/metric.hpp"
#include "costcal/calibrate/linalg.hpp"
#include "costcal/calibrate/suite.hpp"
#include "costcal/vm/timing.hpp"

namespace costcal::calibrate {

struct RowMeta {
  std::string program;
  int size = 0;
  std::uint64_t seed = 0;
};

/// Stacked cost rows (one per program x input) and their measured times.
struct SampleMatrix {
  analysis::CostModel model;
  Matrix c;                   // m x v event counts
  std::vector<double> t;      // m durations, ns
  std::vector<RowMeta> meta;
  int dropped = 0;            // rows rejected by the timer-resolution check
  std::vector<std::string> diagnostics;

  std::size_t m() const { return c.rows(); }
  std::size_t v() const { return c.cols(); }
  /// Same rows restricted to `sub`'s components (all must be present).
  SampleMatrix project(const analysis::CostModel& sub) const;
};

using Timer = std::function<vm::TimingResult(const lang::Program&, const lang::Term&,
                                             int reps, int inner_iters)>;

struct SampleOptions {
  std::vector<int> sizes;     // empty: 25 sizes, 4, 8, ..., 100
  int reps = 10;              // timing repetitions per (program, size)
  int inner_iters = 0;        // 0: chosen so a loop lasts >= min_loop_ns
  double min_loop_ns = 20000;
  std::uint64_t seed = 1;
  Timer timer;                // defaults to vm::profile
  std::function<void(const std::string&)> log;
};

std::vector<int> default_sizes();

/// Times every program at every size. Rows whose timing is resolution
/// limited are dropped and reported. Throws Numeric when m <= v, or when
/// rows were dropped and m <= 4v.
SampleMatrix collect_samples(const std::vector<CalibrationProgram>& suite,
                             const analysis::CostModel& model,
                             const SampleOptions& opts = {});

/// Component names, then duration_ns; one line per row.
std::string to_csv(const SampleMatrix& s);
SampleMatrix from_csv(const std::string& text);

struct ModelFit {
  analysis::CostModel model;
  std::vector<double> k;  // ns per event, aligned with model
  double rss = 0, mrss = 0, s = 0;
  std::size_t m = 0, v = 0;
  std::vector<double> std_err;  // standard error of each constant
  std::vector<double> vif;      // variance inflation factor of each column
  std::vector<std::string> warnings;
};

/// Least-squares fit of the head-metric components of `model` (which must
/// all be columns of `samples`). Negative constants, nearly collinear
/// columns (VIF > 10) and constants within two standard errors of zero are
/// kept and warned about. Builtin components are rejected; they are measured separately.
ModelFit fit_model(const SampleMatrix& samples, const analysis::CostModel& model);

/// Per-call constants for builtins and arithmetic operators, keyed "is/2",
/// "+/2", ... Requires reps >= 100000.
std::map<std::string, double> calibrate_builtins(long reps,
                                                 std::vector<std::string> names = {});

/// Key used for a builtin or operator metric in the builtin-constant map.
std::string builtin_key(const analysis::Metric& m);

/// Fitted constants for one platform.
struct PlatformProfile {
  std::string host;
  std::string timestamp;
  std::uint64_t seed = 0;        // data-generation seed of the samples
  double calibration_s = 0;      // wall time of sample collection and fitting
  std::vector<ModelFit> fits;
  std::map<std::string, double> builtins;

  /// The fit whose model equals the head-metric part of `model`.
  const ModelFit* find(const analysis::CostModel& model) const;
  /// Constants aligned with `model`: fitted values for head metrics, measured
  /// ones for builtins. Throws Input when something is missing.
  std::vector<double> constants(const analysis::CostModel& model) const;

  std::string to_json() const;
  static PlatformProfile from_json(const std::string& text);
  void save(const std::string& path) const;
  static PlatformProfile load(const std::string& path);
};

/// Head-metric components of `model`, in order.
analysis::CostModel head_part(const analysis::CostModel& model);

std::string host_label();
std::string utc_timestamp();

}  // namespace costcal::calibrate
