#pragma once

#include <optional>
#include <string>
#include <vector>

#include "costcal/lang/program.hpp"
#include "costcal/vm/machine.hpp"

namespace costcal::vm {

struct TimingResult {
  std::vector<double> samples_ns;   // raw duration of each timed loop
  std::vector<double> per_exec_ns;  // (sample - overhead) / inner_iters, >= 0
  int reps = 0;
  int inner_iters = 0;
  double overhead_ns = 0;           // empty-loop duration, per loop
  double median_ns = 0;
  double mean_ns = 0;
  double resolution_ns = 0;         // estimated clock granularity
  bool success = false;             // outcome of the goal
  bool resolution_limited = false;  // clock too coarse for the loop duration
  bool clamped = false;             // some sample fell below the overhead
  std::vector<std::string> diagnostics;
};

/// Times `goal` on the uninstrumented path: inner_iters executions per
/// loop, reps loops. The goal's arguments are built before timing starts.
/// Requires exclusive use of the harness (see ExclusiveTiming).
TimingResult profile(const lang::Program& p, const lang::Term& goal, int reps,
                     int inner_iters);
/// As above, with every variable named `In` in `goal_template` replaced by
/// `input`.
TimingResult profile(const lang::Program& p, const lang::Term& goal_template,
                     const lang::Term& input, int reps, int inner_iters);

/// Replaces variables named `name` in `t` by `value`.
lang::Term substitute_var(const lang::Term& t, const std::string& name,
                          const lang::Term& value);

/// Estimated granularity of the monotonic clock, in nanoseconds.
double clock_resolution_ns();

/// Names accepted by time_builtin: "is/2", "</2", ..., "true/0" and the
/// arithmetic operators "+/2", "-/1", ...
std::vector<std::string> registered_builtins();

/// Per-call cost of one builtin or arithmetic operator in nanoseconds, from
/// `reps` executions of a self-test goal minus the same goal without it.
/// Always positive.
double time_builtin(const std::string& name, long reps);

/// One line of profile output.
struct ProfileRecord {
  std::string program;
  std::vector<std::int64_t> sizes;
  int rep = 0;
  double duration_ns = 0;
  std::optional<EventCounts> counts;
};

std::string to_json_line(const ProfileRecord& r);
ProfileRecord parse_record(const std::string& line);

/// Median of a non-empty sample.
double median(std::vector<double> xs);

}  // namespace costcal::vm
