#include "costcal/vm/timing.hpp"

#include <algorithm>
#include <chrono>
#include <nlohmann/json.hpp>
#include <numeric>

#include "costcal/error.hpp"
#include "costcal/lang/parser.hpp"
#include "costcal/vm/exclusive.hpp"

namespace costcal::vm {

using Clock = std::chrono::steady_clock;
using lang::Term;

namespace {

double ns_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::nano>(Clock::now() - t0).count();
}

// Keeps `v` observable so loops are not optimized away.
template <class T>
void keep(T& v) {
  asm volatile("" : : "r,m"(v) : "memory");
}

struct BuiltinCase {
  const char* name;
  const char* with;     // clause using the builtin
  const char* without;  // same clause minus the builtin
};

// Self-test goal is t(7,3). Operator cases subtract the bare `is/2`.
const std::vector<BuiltinCase>& cases() {
  static const std::vector<BuiltinCase> c = {
      {"true/0", "t(A,B) :- true.", "t(A,B)."},
      {"is/2", "t(A,B) :- X is A.", "t(A,B)."},
      {"=:=/2", "t(A,B) :- A =:= A.", "t(A,B)."},
      {"=\\=/2", "t(A,B) :- A =\\= B.", "t(A,B)."},
      {"</2", "t(A,B) :- B < A.", "t(A,B)."},
      {">/2", "t(A,B) :- A > B.", "t(A,B)."},
      {"=</2", "t(A,B) :- B =< A.", "t(A,B)."},
      {">=/2", "t(A,B) :- A >= B.", "t(A,B)."},
      {"+/2", "t(A,B) :- X is A + B.", "t(A,B) :- X is A."},
      {"-/2", "t(A,B) :- X is A - B.", "t(A,B) :- X is A."},
      {"*/2", "t(A,B) :- X is A * B.", "t(A,B) :- X is A."},
      {"//2", "t(A,B) :- X is A / B.", "t(A,B) :- X is A."},
      {"///2", "t(A,B) :- X is A // B.", "t(A,B) :- X is A."},
      {"mod/2", "t(A,B) :- X is A mod B.", "t(A,B) :- X is A."},
      {"rem/2", "t(A,B) :- X is A rem B.", "t(A,B) :- X is A."},
      {"^/2", "t(A,B) :- X is A ^ B.", "t(A,B) :- X is A."},
      {"**/2", "t(A,B) :- X is A ** B.", "t(A,B) :- X is A."},
      {"min/2", "t(A,B) :- X is min(A, B).", "t(A,B) :- X is A."},
      {"max/2", "t(A,B) :- X is max(A, B).", "t(A,B) :- X is A."},
      {"-/1", "t(A,B) :- X is -A.", "t(A,B) :- X is A."},
      {"abs/1", "t(A,B) :- X is abs(A).", "t(A,B) :- X is A."},
  };
  return c;
}

// Median over a few repetitions of the per-call time of `reps` runs.
double per_call_ns(const lang::Program& p, const Term& goal, long reps) {
  Machine m(p);
  auto prepared = m.prepare(goal);
  bool sink = false;
  for (int i = 0; i < 100; ++i) sink ^= prepared.run();  // warm-up
  std::vector<double> xs;
  for (int r = 0; r < 5; ++r) {
    auto t0 = Clock::now();
    for (long i = 0; i < reps; ++i) {
      bool ok = prepared.run();
      keep(ok);
      sink ^= ok;
    }
    xs.push_back(ns_since(t0) / static_cast<double>(reps));
  }
  keep(sink);
  return median(xs);
}

}  // namespace

double median(std::vector<double> xs) {
  if (xs.empty()) throw Error(ErrorKind::Numeric, "median of an empty sample");
  std::sort(xs.begin(), xs.end());
  std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2;
}

double clock_resolution_ns() {
  static const double res = [] {
    double best = std::chrono::duration<double, std::nano>(Clock::duration(1)).count();
    double observed = 1e18;
    for (int i = 0; i < 200; ++i) {
      auto a = Clock::now();
      auto b = Clock::now();
      while (b == a) b = Clock::now();
      observed = std::min(observed, std::chrono::duration<double, std::nano>(b - a).count());
    }
    return std::max(best, observed);
  }();
  return res;
}

Term substitute_var(const Term& t, const std::string& name, const Term& value) {
  if (t.is_var()) return t.as_var().name == name ? value : t;
  if (!t.is_compound()) return t;
  std::vector<Term> args;
  for (const auto& a : t.as_compound().args) args.push_back(substitute_var(a, name, value));
  return Term::compound(t.as_compound().functor, std::move(args));
}

TimingResult profile(const lang::Program& p, const Term& goal_template,
                     const Term& input, int reps, int inner_iters) {
  return profile(p, substitute_var(goal_template, "In", input), reps, inner_iters);
}

TimingResult profile(const lang::Program& p, const Term& goal, int reps, int inner_iters) {
  if (reps < 1) throw Error(ErrorKind::Input, "profile: reps must be >= 1");
  if (inner_iters < 1) throw Error(ErrorKind::Input, "profile: inner_iters must be >= 1");
  ExclusiveTiming exclusive;
  Machine m(p);
  auto prepared = m.prepare(goal);

  TimingResult r;
  r.reps = reps;
  r.inner_iters = inner_iters;
  r.resolution_ns = clock_resolution_ns();
  r.success = prepared.run();  // warm-up; also surfaces runtime errors

  std::vector<double> overheads;
  bool sink = r.success;
  for (int k = 0; k < reps; ++k) {
    auto t0 = Clock::now();
    for (int i = 0; i < inner_iters; ++i) {
      prepared.reset();
      keep(i);
    }
    overheads.push_back(ns_since(t0));

    t0 = Clock::now();
    for (int i = 0; i < inner_iters; ++i) {
      bool ok = prepared.run();
      keep(ok);
      sink ^= ok;
    }
    r.samples_ns.push_back(ns_since(t0));
  }
  keep(sink);
  r.overhead_ns = median(overheads);

  for (double s : r.samples_ns) {
    double x = (s - r.overhead_ns) / inner_iters;
    if (x < 0) {
      x = 0;
      r.clamped = true;
    }
    r.per_exec_ns.push_back(x);
  }
  if (r.clamped)
    r.diagnostics.push_back("warning: sample below loop overhead, clamped to 0");
  r.median_ns = median(r.per_exec_ns);
  r.mean_ns = std::accumulate(r.per_exec_ns.begin(), r.per_exec_ns.end(), 0.0) /
              static_cast<double>(r.per_exec_ns.size());
  double loop = median(r.samples_ns);
  if (r.resolution_ns > 0.01 * loop) {
    r.resolution_limited = true;
    r.diagnostics.push_back("timer resolution " + std::to_string(r.resolution_ns) +
                            " ns exceeds 1% of the measured loop (" +
                            std::to_string(loop) + " ns); increase inner_iters");
  }
  return r;
}

std::vector<std::string> registered_builtins() {
  std::vector<std::string> out;
  for (const auto& c : cases()) out.emplace_back(c.name);
  return out;
}

double time_builtin(const std::string& name, long reps) {
  if (reps < 1) throw Error(ErrorKind::Input, "time_builtin: reps must be >= 1");
  auto it = std::find_if(cases().begin(), cases().end(),
                         [&](const BuiltinCase& c) { return name == c.name; });
  if (it == cases().end())
    throw Error(ErrorKind::Input, "no self-test goal registered for " + name);
  ExclusiveTiming exclusive;
  auto with = lang::parse_program(it->with);
  auto without = lang::parse_program(it->without);
  Term goal = Term::compound("t", {Term::integer(7), Term::integer(3)});
  double a = per_call_ns(with, goal, reps);
  double b = per_call_ns(without, goal, reps);
  // Differences below the noise floor still yield a positive constant.
  return std::max(a - b, 1e-3);
}

std::string to_json_line(const ProfileRecord& r) {
  nlohmann::json j;
  j["program"] = r.program;
  j["sizes"] = r.sizes;
  j["rep"] = r.rep;
  j["duration_ns"] = r.duration_ns;
  if (r.counts) {
    nlohmann::json c = nlohmann::json::object();
    for (const auto& [m, v] : *r.counts) c[m.str()] = v;
    j["counts"] = c;
  }
  return j.dump();
}

ProfileRecord parse_record(const std::string& line) {
  try {
    auto j = nlohmann::json::parse(line);
    ProfileRecord r;
    r.program = j.at("program").get<std::string>();
    r.sizes = j.at("sizes").get<std::vector<std::int64_t>>();
    r.rep = j.at("rep").get<int>();
    r.duration_ns = j.at("duration_ns").get<double>();
    if (j.contains("counts")) {
      EventCounts c;
      for (const auto& [k, v] : j["counts"].items())
        c[analysis::Metric::parse(k)] = v.get<std::int64_t>();
      r.counts = std::move(c);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Input, std::string("bad profile record: ") + e.what());
  }
}

}  // namespace costcal::vm
