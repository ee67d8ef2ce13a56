#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>

#include "costcal/analysis/metric.hpp"
#include "costcal/lang/program.hpp"

namespace costcal::vm {

/// Dynamic tallies per metric; the six head metrics are always present.
using EventCounts = analysis::EventMap;

struct SolveResult {
  bool success = false;
  std::map<std::string, lang::Term> bindings;  // named goal variables
  EventCounts counts;
};

struct MachineOptions {
  int max_depth = 100000;  // call-nesting guard
  bool check_modes = true;
};

class Engine;

/// Deterministic resolution interpreter. The first clause whose head and
/// body both succeed is committed; counts from failed clause attempts are
/// discarded. A Machine is single-threaded; use one per thread.
class Machine {
 public:
  explicit Machine(const lang::Program& p, MachineOptions opts = {});
  ~Machine();
  Machine(Machine&&) noexcept;
  Machine& operator=(Machine&&) noexcept;

  /// Instrumented run. A builtin goal (e.g. `true`) runs as the body of a
  /// one-clause wrapper, which adds one resolution to the counts.
  SolveResult solve(const lang::Term& goal);
  /// Uninstrumented run; returns success.
  bool run(const lang::Term& goal);

  /// A goal loaded once and re-run many times without reloading, for the
  /// timing loop. Only one prepared goal is live per Machine.
  class Prepared {
   public:
    bool run();    // resets state to just after loading, then executes
    void reset();  // the reset alone (for overhead measurement)

   private:
    friend class Machine;
    Engine* engine_ = nullptr;
  };
  Prepared prepare(const lang::Term& goal);

 private:
  std::unique_ptr<Engine> engine_;
};

}  // namespace costcal::vm
