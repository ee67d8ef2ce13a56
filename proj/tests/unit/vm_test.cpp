#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "costcal/analysis/analyzer.hpp"
#include "costcal/error.hpp"
#include "costcal/lang/parser.hpp"
#include "costcal/vm/exclusive.hpp"
#include "costcal/vm/machine.hpp"
#include "costcal/vm/timing.hpp"
#include "files.hpp"

using namespace costcal;
using analysis::Metric;
using costcal::testing::load_program;
using lang::parse_program;
using lang::Term;
using vm::Machine;

namespace {

Term goal(const std::string& text) { return lang::parse_term(text).term; }

Term int_list(int n, int start = 1) {
  std::vector<Term> xs;
  for (int i = 0; i < n; ++i) xs.push_back(Term::integer(start + i));
  return Term::list(xs);
}

Term out(const char* name) { return Term::var(name, 1ull << 50); }

std::int64_t count_of(const vm::EventCounts& c, const Metric& m) {
  auto it = c.find(m);
  return it == c.end() ? 0 : it->second;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Input;
}

const char* kAppend = R"(
:- mode(app/3, [in,in,out]).
:- measure(app/3, [length,length,length]).
app([],L,L).
app([X|Xs],Ys,[X|Zs]) :- app(Xs,Ys,Zs).
)";

}  // namespace

// ------------------------------------------------------------- examples

TEST(Solve, AppendTwoElements) {
  Machine m(parse_program(kAppend));
  auto r = m.solve(goal("app([1,2],[3],Z)"));
  ASSERT_TRUE(r.success);
  EXPECT_EQ(lang::to_string(r.bindings.at("Z")), "[1,2,3]");
  EXPECT_EQ(count_of(r.counts, Metric::step()), 3);
}

TEST(Solve, ZeroAryFact) {
  Machine m(parse_program("q."));
  auto r = m.solve(goal("q"));
  ASSERT_TRUE(r.success);
  vm::EventCounts want{{Metric::step(), 1},   {Metric::nargs(), 0},
                       {Metric::giunif(), 0}, {Metric::gounif(), 0},
                       {Metric::viunif(), 0}, {Metric::vounif(), 0}};
  EXPECT_EQ(r.counts, want);
}

TEST(Solve, UnboundInputIsModeViolation) {
  Machine m(parse_program(kAppend));
  EXPECT_EQ(kind_of([&] { m.solve(goal("app(X,Y,Z)")); }), ErrorKind::Runtime);
}

TEST(Solve, HeadCountsOfBaseClause) {
  Machine m(parse_program(kAppend));
  auto r = m.solve(goal("app([],[7],Z)"));
  vm::EventCounts want{{Metric::step(), 1},   {Metric::nargs(), 3},
                       {Metric::giunif(), 1}, {Metric::gounif(), 0},
                       {Metric::viunif(), 1}, {Metric::vounif(), 1}};
  EXPECT_EQ(r.counts, want);
}

TEST(Solve, RecursiveClauseHeadCounts) {
  // app([X|Xs],Ys,[X|Zs]): giunif 3, viunif 1, gounif 3.
  auto p = parse_program(kAppend);
  Machine m(p);
  auto r = m.solve(goal("app([1],[],Z)"));
  EXPECT_EQ(count_of(r.counts, Metric::giunif()), 3 + 1);
  EXPECT_EQ(count_of(r.counts, Metric::gounif()), 3);
  EXPECT_EQ(count_of(r.counts, Metric::viunif()), 2);
  EXPECT_EQ(count_of(r.counts, Metric::vounif()), 1);
}

TEST(Solve, Errors) {
  Machine u(parse_program("p(X) :- q(X)."));
  EXPECT_EQ(kind_of([&] { u.solve(goal("p(1)")); }), ErrorKind::Runtime);
  EXPECT_EQ(kind_of([&] { u.solve(goal("nothere(1)")); }), ErrorKind::Runtime);

  Machine a(parse_program("p(X, Y) :- Y is X + Z."));
  EXPECT_EQ(kind_of([&] { a.solve(goal("p(1, Y)")); }), ErrorKind::Runtime);

  vm::MachineOptions opts;
  opts.max_depth = 50;
  Machine d(parse_program("loop(X) :- loop(X)."), opts);
  EXPECT_EQ(kind_of([&] { d.solve(goal("loop(1)")); }), ErrorKind::Runtime);

  Machine t(parse_program("p(X) :- Y is X + 1."));
  EXPECT_EQ(kind_of([&] { t.solve(goal("p(foo)")); }), ErrorKind::Runtime);
}

TEST(Solve, FailedClauseCountsAreDiscarded) {
  auto p = parse_program(R"(
:- mode(p/2, [in,out]).
p(X, big) :- X > 5.
p(X, small).
)");
  Machine m(p);
  auto r = m.solve(goal("p(3, R)"));
  ASSERT_TRUE(r.success);
  EXPECT_EQ(lang::to_string(r.bindings.at("R")), "small");
  EXPECT_EQ(count_of(r.counts, Metric::step()), 1);
  EXPECT_EQ(count_of(r.counts, Metric::nargs()), 2);
  EXPECT_EQ(count_of(r.counts, Metric::gounif()), 1);
  EXPECT_EQ(count_of(r.counts, Metric::viunif()), 1);
  EXPECT_EQ(count_of(r.counts, Metric::builtin(">", 2)), 0);

  auto big = m.solve(goal("p(9, R)"));
  EXPECT_EQ(lang::to_string(big.bindings.at("R")), "big");
  EXPECT_EQ(count_of(big.counts, Metric::builtin(">", 2)), 1);
}

TEST(Solve, FailureIsReported) {
  Machine m(parse_program("p(1)."));
  auto r = m.solve(goal("p(2)"));
  EXPECT_FALSE(r.success);
  EXPECT_EQ(count_of(r.counts, Metric::step()), 0);
}

TEST(Solve, Arithmetic) {
  auto p = parse_program("f(X, Y) :- Y is X.");
  Machine m(p);
  auto v = [&](const std::string& e) {
    return lang::to_string(m.solve(goal("f(" + e + ", Y)")).bindings.at("Y"));
  };
  EXPECT_EQ(v("7/2"), "3.5");
  EXPECT_EQ(v("6/3"), "2");
  EXPECT_EQ(v("7//2"), "3");
  EXPECT_EQ(v("-7 mod 3"), "2");
  EXPECT_EQ(v("-7 rem 3"), "-1");
  EXPECT_EQ(v("2^10"), "1024");
  EXPECT_EQ(v("max(3, 8) - min(3, 8)"), "5");
  EXPECT_EQ(v("abs(-4) * -(2)"), "-8");
  EXPECT_EQ(kind_of([&] { m.solve(goal("f(1/0, Y)")); }), ErrorKind::Runtime);
}

TEST(Solve, ArithmeticCountsUseRuntimeValues) {
  // The expression bound to X contributes its operators.
  auto p = parse_program("f(X, Y) :- Y is X * 2.");
  Machine m(p);
  auto r = m.solve(goal("f(1+2+3, Y)"));
  EXPECT_EQ(lang::to_string(r.bindings.at("Y")), "12");
  EXPECT_EQ(count_of(r.counts, Metric::arith("*", 2)), 1);
  EXPECT_EQ(count_of(r.counts, Metric::arith("+", 2)), 2);
  EXPECT_EQ(count_of(r.counts, Metric::builtin("is", 2)), 1);
}

TEST(Solve, ComparisonsCountBothSides) {
  auto p = parse_program("g(X) :- X + 1 > X - 1, X * 2 =:= X + X.");
  Machine m(p);
  auto r = m.solve(goal("g(4)"));
  ASSERT_TRUE(r.success);
  EXPECT_EQ(count_of(r.counts, Metric::arith("+", 2)), 2);
  EXPECT_EQ(count_of(r.counts, Metric::arith("-", 2)), 1);
  EXPECT_EQ(count_of(r.counts, Metric::arith("*", 2)), 1);
  EXPECT_EQ(count_of(r.counts, Metric::builtin(">", 2)), 1);
  EXPECT_EQ(count_of(r.counts, Metric::builtin("=:=", 2)), 1);
}

TEST(Solve, BuiltinGoalRunsThroughWrapper) {
  Machine m(parse_program("q."));
  auto r = m.solve(goal("X is 3 + 4"));
  ASSERT_TRUE(r.success);
  EXPECT_EQ(count_of(r.counts, Metric::step()), 1);
  EXPECT_EQ(count_of(r.counts, Metric::arith("+", 2)), 1);
  EXPECT_TRUE(m.run(goal("true")));
}

TEST(Solve, SharedVariablesAndDeepStructures) {
  auto p = parse_program(R"(
same(X, X).
wrap(X, f(g(X), [X, h])).
)");
  Machine m(p);
  EXPECT_TRUE(m.solve(goal("same(f(A, b), f(a, B))")).success);
  auto r = m.solve(goal("same(f(A, b), f(a, B))"));
  EXPECT_EQ(lang::to_string(r.bindings.at("A")), "a");
  EXPECT_EQ(lang::to_string(r.bindings.at("B")), "b");
  EXPECT_FALSE(m.solve(goal("same(f(a), f(b))")).success);
  auto w = m.solve(goal("wrap(k(1), W)"));
  EXPECT_EQ(lang::to_string(w.bindings.at("W")), "f(g(k(1)),[k(1),h])");
}

// ------------------------------------------- counter / analysis agreement

namespace {

struct BenchCase {
  std::string program;
  std::string name;
  int arity;
  int lo, hi;
  std::function<Term(int)> make;
};

std::vector<BenchCase> bench_cases() {
  auto var = [](const char* n) { return Term::var(n, 1ull << 52); };
  return {
      {"append", "app", 3, 0, 20,
       [=](int n) { return Term::compound("app", {int_list(n), int_list(3, 50), var("Z")}); }},
      {"nrev", "nrev", 2, 0, 20,
       [=](int n) { return Term::compound("nrev", {int_list(n), var("R")}); }},
      {"palindrome", "palindrome", 2, 0, 20,
       [=](int n) { return Term::compound("palindrome", {int_list(n), var("P")}); }},
      {"hanoi", "hanoi", 5, 1, 12,
       [=](int n) {
         return Term::compound("hanoi", {Term::integer(n), Term::atom("a"), Term::atom("b"),
                                         Term::atom("c"), var("M")});
       }},
      {"powset", "powset", 2, 0, 10,
       [=](int n) { return Term::compound("powset", {int_list(n), var("P")}); }},
      {"evpol", "evpol", 3, 0, 20,
       [=](int n) { return Term::compound("evpol", {int_list(n), Term::integer(2), var("V")}); }},
  };
}

analysis::CostModel oracle_model() {
  auto ms = analysis::CostModel::all_head().components();
  for (const char* b : {"is", ">"}) ms.push_back(Metric::builtin(b, 2));
  for (const char* o : {"+", "-", "*"}) ms.push_back(Metric::arith(o, 2));
  return analysis::CostModel(ms);
}

}  // namespace

TEST(Equivalence, CountsMatchStaticCostFunctionsExactly) {
  auto model = oracle_model();
  for (const auto& bc : bench_cases()) {
    SCOPED_TRACE(bc.program);
    auto p = load_program(bc.program);
    lang::PredKey key{bc.name, bc.arity};
    auto fs = analysis::predicate_cost(p, key, model, analysis::Bound::Exact);
    Machine m(p);
    for (int n = bc.lo; n <= bc.hi; ++n) {
      SCOPED_TRACE(n);
      Term g = bc.make(n);
      auto r = m.solve(g);
      ASSERT_TRUE(r.success);
      // Every event the machine saw is covered by the model.
      for (const auto& [metric, v] : r.counts)
        if (v != 0) EXPECT_TRUE(model.contains(metric)) << metric.str();
      auto sizes = analysis::input_sizes(g, p.at(key).decl);
      for (std::size_t i = 0; i < model.size(); ++i) {
        auto want = analysis::eval_cost(fs[i], sizes);
        EXPECT_EQ(want, Rational(count_of(r.counts, model[i])))
            << model[i].str();
      }
    }
  }
}

TEST(Equivalence, AppendStepIsNPlusOne) {
  auto p = load_program("append");
  Machine m(p);
  for (int n = 0; n <= 20; ++n) {
    auto r = m.solve(Term::compound("app", {int_list(n), Term::nil(), out("Z")}));
    EXPECT_EQ(count_of(r.counts, Metric::step()), n + 1);
  }
}

TEST(Equivalence, NrevStepIsQuadratic) {
  auto p = load_program("nrev");
  Machine m(p);
  for (int n = 0; n <= 20; ++n) {
    auto r = m.solve(Term::compound("nrev", {int_list(n), out("R")}));
    EXPECT_EQ(count_of(r.counts, Metric::step()), (n * n + 3 * n + 2) / 2);
  }
}

TEST(Equivalence, OutputsAreCorrect) {
  Machine nrev(load_program("nrev"));
  auto r = nrev.solve(goal("nrev([1,2,3,4], R)"));
  EXPECT_EQ(lang::to_string(r.bindings.at("R")), "[4,3,2,1]");
  Machine pal(load_program("palindrome"));
  EXPECT_EQ(lang::to_string(pal.solve(goal("palindrome([1,2,3], P)")).bindings.at("P")),
            "[1,2,3,3,2,1]");
  Machine ps(load_program("powset"));
  EXPECT_EQ(lang::to_string(ps.solve(goal("powset([1,2], P)")).bindings.at("P")),
            "[[1,2],[1],[2],[]]");
  Machine ev(load_program("evpol"));
  // 1 + 2x + 3x^2 at x = 2
  EXPECT_EQ(lang::to_string(ev.solve(goal("evpol([1,2,3], 2, V)")).bindings.at("V")), "17");
  Machine h(load_program("hanoi"));
  EXPECT_EQ(lang::to_string(h.solve(goal("hanoi(2, a, b, c, M)")).bindings.at("M")),
            "[mv(a,b),mv(a,c),mv(b,c)]");
}

// --------------------------------------------------------- properties

TEST(Properties, CountsAreDeterministic) {
  for (const auto& bc : bench_cases()) {
    auto p = load_program(bc.program);
    Machine m(p);
    Term g = bc.make(bc.lo + 5);
    auto a = m.solve(g);
    auto b = m.solve(g);
    EXPECT_EQ(a.counts, b.counts) << bc.program;
    EXPECT_EQ(a.bindings.size(), b.bindings.size());
  }
}

TEST(Properties, TimedAndCountedPathsAgree) {
  for (const auto& bc : bench_cases()) {
    auto p = load_program(bc.program);
    Machine m(p);
    for (int n = bc.lo; n <= std::min(bc.hi, bc.lo + 6); ++n) {
      Term g = bc.make(n);
      EXPECT_EQ(m.solve(g).success, m.run(g)) << bc.program;
      auto prepared = m.prepare(g);
      EXPECT_TRUE(prepared.run());
      EXPECT_TRUE(prepared.run());  // re-runnable after reset
    }
  }
  Machine f(parse_program("p(1)."));
  EXPECT_FALSE(f.run(goal("p(2)")));
}

TEST(Properties, CountsAreAdditiveAcrossGoals) {
  auto p = load_program("append");
  Machine m(p);
  auto a = m.solve(Term::compound("app", {int_list(4), Term::nil(), out("Z")}));
  auto b = m.solve(Term::compound("app", {int_list(7), Term::nil(), out("Z")}));
  // app over 4 then 7 elements = 5 + 8 resolutions.
  EXPECT_EQ(count_of(a.counts, Metric::step()) + count_of(b.counts, Metric::step()), 13);
}

TEST(Properties, ConcurrentCountingRunsAgree) {
  auto p = load_program("nrev");
  Term g = Term::compound("nrev", {int_list(15), out("R")});
  auto want = Machine(p).solve(g).counts;
  std::atomic<int> mismatches{0};
  std::vector<std::thread> ts;
  for (int t = 0; t < 4; ++t)
    ts.emplace_back([&] {
      Machine m(p);
      for (int i = 0; i < 20; ++i)
        if (m.solve(g).counts != want) ++mismatches;
    });
  for (auto& t : ts) t.join();
  EXPECT_EQ(mismatches.load(), 0);
}

// -------------------------------------------------------------- timing

TEST(Profile, TrueGoalIsNearZero) {
  auto r = vm::profile(parse_program("q."), goal("true"), 5, 1000);
  EXPECT_EQ(r.per_exec_ns.size(), 5u);
  for (double x : r.per_exec_ns) EXPECT_GE(x, 0);
  EXPECT_GE(r.median_ns, 0);
  EXPECT_LT(r.median_ns, 1e5);
}

TEST(Profile, NrevShape) {
  auto p = load_program("nrev");
  auto r = vm::profile(p, Term::compound("nrev", {int_list(30), out("R")}), 5, 100);
  EXPECT_EQ(r.samples_ns.size(), 5u);
  EXPECT_EQ(r.reps, 5);
  EXPECT_TRUE(r.success);
  EXPECT_GT(r.median_ns, 0);
  EXPECT_LE(*std::min_element(r.per_exec_ns.begin(), r.per_exec_ns.end()), r.median_ns);
}

TEST(Profile, TemplateSubstitution) {
  auto p = load_program("nrev");
  auto r = vm::profile(p, goal("nrev(In, R)"), int_list(5), 3, 10);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.samples_ns.size(), 3u);
}

TEST(Profile, Preconditions) {
  auto p = load_program("nrev");
  EXPECT_EQ(kind_of([&] { vm::profile(p, goal("nrev([1], R)"), 0, 10); }), ErrorKind::Input);
  EXPECT_EQ(kind_of([&] { vm::profile(p, goal("nrev([1], R)"), 1, 0); }), ErrorKind::Input);
}

TEST(Profile, ResolutionFlagMatchesDiagnostic) {
  auto r = vm::profile(parse_program("q."), goal("q"), 3, 1);
  bool advised = std::any_of(r.diagnostics.begin(), r.diagnostics.end(), [](const std::string& d) {
    return d.find("inner_iters") != std::string::npos;
  });
  EXPECT_EQ(r.resolution_limited, advised);
  EXPECT_GT(vm::clock_resolution_ns(), 0);
}

TEST(Profile, LargerWorkloadTakesLonger) {
  auto p = load_program("nrev");
  auto small = vm::profile(p, Term::compound("nrev", {int_list(20), out("R")}), 7, 50);
  auto big = vm::profile(p, Term::compound("nrev", {int_list(80), out("R")}), 7, 50);
  // nrev(80) does ~15x the work of nrev(20); allow wide noise.
  EXPECT_GT(big.median_ns, small.median_ns);
}

TEST(TimeBuiltin, PositiveForRegistered) {
  for (const char* b : {"+/2", "is/2", "=:=/2", ">/2", "*/2"}) {
    double k = vm::time_builtin(b, 20000);
    EXPECT_GT(k, 0) << b;
  }
  auto names = vm::registered_builtins();
  EXPECT_NE(std::find(names.begin(), names.end(), "true/0"), names.end());
}

TEST(TimeBuiltin, Errors) {
  EXPECT_EQ(kind_of([] { vm::time_builtin("foo/3", 10); }), ErrorKind::Input);
  EXPECT_EQ(kind_of([] { vm::time_builtin("+/2", 0); }), ErrorKind::Input);
}

TEST(Exclusive, TimingRefusedWhileCounting) {
  vm::CountingGuard g;
  EXPECT_EQ(kind_of([] { vm::profile(parse_program("q."), goal("q"), 1, 1); }),
            ErrorKind::Concurrency);
}

TEST(Exclusive, CountingRefusedWhileTiming) {
  Machine m(parse_program("q."));
  vm::ExclusiveTiming t;
  EXPECT_EQ(kind_of([&] { m.solve(goal("q")); }), ErrorKind::Concurrency);
  EXPECT_EQ(kind_of([] { vm::ExclusiveTiming again; }), ErrorKind::Concurrency);
}

TEST(Exclusive, ReleasedAfterScope) {
  { vm::CountingGuard g; }
  EXPECT_EQ(vm::active_counting_runs(), 0);
  EXPECT_NO_THROW(vm::profile(parse_program("q."), goal("q"), 1, 1));
}

TEST(Records, JsonLineRoundTrip) {
  vm::ProfileRecord r;
  r.program = "nrev";
  r.sizes = {30};
  r.rep = 4;
  r.duration_ns = 1234.5;
  r.counts = vm::EventCounts{{Metric::step(), 496}, {Metric::arith("+", 2), 3}};
  auto line = vm::to_json_line(r);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  auto back = vm::parse_record(line);
  EXPECT_EQ(back.program, "nrev");
  EXPECT_EQ(back.sizes, r.sizes);
  EXPECT_EQ(back.rep, 4);
  EXPECT_DOUBLE_EQ(back.duration_ns, 1234.5);
  ASSERT_TRUE(back.counts);
  EXPECT_EQ(*back.counts, *r.counts);
  EXPECT_EQ(kind_of([] { vm::parse_record("{nope"); }), ErrorKind::Input);
}
