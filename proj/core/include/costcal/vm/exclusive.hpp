#pragma once

namespace costcal::vm {

/// Process-wide bookkeeping of harness activity. Counting runs may overlap
/// each other; a timing section requires that nothing else runs.

/// Held for the duration of a counting run. Throws Concurrency while a
/// timing section is active.
class CountingGuard {
 public:
  CountingGuard();
  ~CountingGuard();
  CountingGuard(const CountingGuard&) = delete;
  CountingGuard& operator=(const CountingGuard&) = delete;
};

/// Held for the duration of a timing section. Throws Concurrency when any
/// counting run or another timing section is active.
class ExclusiveTiming {
 public:
  ExclusiveTiming();
  ~ExclusiveTiming();
  ExclusiveTiming(const ExclusiveTiming&) = delete;
  ExclusiveTiming& operator=(const ExclusiveTiming&) = delete;
};

/// Number of counting runs in progress (diagnostics and tests).
int active_counting_runs();

}  // namespace costcal::vm
