#include "costcal/vm/exclusive.hpp"

#include <mutex>

#include "costcal/error.hpp"

namespace costcal::vm {
namespace {

std::mutex g_mu;
int g_counting = 0;
bool g_timing = false;

}  // namespace

CountingGuard::CountingGuard() {
  std::lock_guard lk(g_mu);
  if (g_timing)
    throw Error(ErrorKind::Concurrency, "counting run refused: a timing section is active");
  ++g_counting;
}

CountingGuard::~CountingGuard() {
  std::lock_guard lk(g_mu);
  --g_counting;
}

ExclusiveTiming::ExclusiveTiming() {
  std::lock_guard lk(g_mu);
  if (g_timing)
    throw Error(ErrorKind::Concurrency, "timing refused: another timing section is active");
  if (g_counting > 0)
    throw Error(ErrorKind::Concurrency,
                "timing refused: " + std::to_string(g_counting) +
                    " counting run(s) active; timed runs need exclusive use of the process");
  g_timing = true;
}

ExclusiveTiming::~ExclusiveTiming() {
  std::lock_guard lk(g_mu);
  g_timing = false;
}

int active_counting_runs() {
  std::lock_guard lk(g_mu);
  return g_counting;
}

}  // namespace costcal::vm
