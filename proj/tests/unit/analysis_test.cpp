#include <gtest/gtest.h>

#include <random>

#include "costcal/analysis/analyzer.hpp"
#include "costcal/error.hpp"
#include "costcal/lang/parser.hpp"
#include "files.hpp"

using namespace costcal;
using namespace costcal::analysis;
using costcal::testing::load_program;
using lang::parse_program;
using lang::parse_term;

namespace {

const lang::PredicateDecl& decl_of(const lang::Program& p, const std::string& name,
                                   int arity) {
  return p.at({name, arity}).decl;
}

EventMap head_of(const std::string& src, const std::string& name, int arity,
                 int clause) {
  auto p = parse_program(src);
  return head_metrics(p.at({name, arity}).clauses.at(clause), decl_of(p, name, arity));
}

const char* kAppend = R"(
:- mode(app/3, [in,in,out]).
:- measure(app/3, [length,length,length]).
app([],L,L).
app([X|Xs],Ys,[X|Zs]) :- app(Xs,Ys,Zs).
)";

// Counts subterms whose principal functor is op/arity with an explicit
// stack, independent of the recursive definition under test.
std::int64_t count_subterms(const lang::Term& root, const std::string& op, int arity) {
  std::int64_t n = 0;
  std::vector<const lang::Term*> stack{&root};
  while (!stack.empty()) {
    const lang::Term* t = stack.back();
    stack.pop_back();
    if (!t->is_compound()) continue;
    if (t->functor() == op && t->arity() == arity) ++n;
    for (const auto& a : t->as_compound().args) stack.push_back(&a);
  }
  return n;
}

lang::Term random_expr(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, 9);
  int k = depth <= 0 ? pick(rng) % 2 : pick(rng);
  if (k == 0) return lang::Term::integer(std::uniform_int_distribution<int>(0, 9)(rng));
  if (k == 1) return lang::Term::var("X", 1000 + pick(rng));
  static const char* bin[] = {"+", "-", "*", "//", "mod", "max"};
  if (k == 9) return lang::Term::compound("-", {random_expr(rng, depth - 1)});
  const char* f = bin[std::uniform_int_distribution<int>(0, 5)(rng)];
  return lang::Term::compound(f, {random_expr(rng, depth - 1), random_expr(rng, depth - 1)});
}

Guard point_guard(int v, std::int64_t lo, std::optional<std::int64_t> hi) {
  Guard g;
  g.vars[v] = Interval{lo, hi ? std::optional<Integer>(*hi) : std::nullopt};
  return g;
}

// f(n) = rec(n) for n > n0, f(n0) = base.
int define_linear(Analyzer& a, const ExprPtr& base, std::int64_t n0,
                  const std::function<ExprPtr(int self)>& rec) {
  int id = a.next_id();
  Recurrence r;
  r.pred = {"f", 1};
  r.quantity = Quantity::cost(Metric::step());
  r.size_vars = {1};
  r.arity = 1;
  r.cases.push_back({-1, 0, point_guard(1, n0, n0), base});
  r.cases.push_back({-1, 0, point_guard(1, n0 + 1, std::nullopt), rec(id)});
  EXPECT_EQ(a.define(r), id);
  return id;
}

ExprPtr self_at(int id, std::int64_t dec) {
  return Expr::call(id, {Expr::sub(Expr::variable(1), Expr::constant(dec))});
}

Rational at(const CostFunction& f, std::int64_t n) { return f.eval({n, 0, 0, 0, 0}); }

}  // namespace

// ----------------------------------------------------------- head metrics

TEST(HeadMetrics, AppendFact) {
  auto m = head_of(kAppend, "app", 3, 0);
  EXPECT_EQ(m[Metric::step()], 1);
  EXPECT_EQ(m[Metric::nargs()], 3);
  EXPECT_EQ(m[Metric::giunif()], 1);
  EXPECT_EQ(m[Metric::viunif()], 1);
  EXPECT_EQ(m[Metric::vounif()], 1);
  EXPECT_EQ(m[Metric::gounif()], 0);
}

TEST(HeadMetrics, AppendRecursiveClause) {
  auto m = head_of(kAppend, "app", 3, 1);
  EXPECT_EQ(m[Metric::step()], 1);
  EXPECT_EQ(m[Metric::nargs()], 3);
  EXPECT_EQ(m[Metric::giunif()], 3);
  EXPECT_EQ(m[Metric::viunif()], 1);
  EXPECT_EQ(m[Metric::gounif()], 3);
  EXPECT_EQ(m[Metric::vounif()], 0);
}

TEST(HeadMetrics, ZeroAryHead) {
  auto m = head_of(":- mode(p/0, []).\np.", "p", 0, 0);
  EXPECT_EQ(m[Metric::step()], 1);
  EXPECT_EQ(m[Metric::nargs()], 0);
  for (auto k : {Metric::giunif(), Metric::gounif(), Metric::viunif(), Metric::vounif()})
    EXPECT_EQ(m[k], 0);
}

TEST(HeadMetrics, MissingModesIsAnError) {
  auto p = parse_program("p(a).");
  EXPECT_THROW(head_metrics(p.at({"p", 1}).clauses[0], p.at({"p", 1}).decl), Error);
}

TEST(HeadMetrics, EveryArgumentSymbolCountedOnce) {
  auto p = parse_program(
      ":- mode(q/4,[in,out,in,out]).\nq(f(X,g(a)), Y, Z, [b,c|W]).");
  const auto& c = p.at({"q", 4}).clauses[0];
  auto m = head_metrics(c, p.at({"q", 4}).decl);
  std::int64_t expect = 0;
  for (int i = 0; i < 4; ++i)
    expect += c.head.arg(i).is_var() ? 1 : static_cast<std::int64_t>(lang::symbol_count(c.head.arg(i)));
  EXPECT_EQ(m[Metric::giunif()] + m[Metric::gounif()] + m[Metric::viunif()] +
                m[Metric::vounif()],
            expect);
}

// ---------------------------------------------------------------- EvCost

TEST(EvCost, ReferenceAndDerivedExamples) {
  EXPECT_EQ(ev_cost("+", 2, parse_term("3").term), 0);
  EXPECT_EQ(ev_cost("+", 2, parse_term("(1+2)+X").term), 2);
  EXPECT_EQ(ev_cost("*", 2, parse_term("(1+2)+X").term), 0);
  EXPECT_EQ(ev_cost("+", 2, parse_term("X").term), 0);
}

TEST(EvCost, NonArithmeticFunctorRejected) {
  EXPECT_THROW(ev_cost("+", 2, parse_term("f(1)+2").term), Error);
}

TEST(EvCost, RandomExpressionsMatchSubtermWalk) {
  std::mt19937 rng(7);
  const std::pair<const char*, int> ops[] = {{"+", 2}, {"-", 2}, {"*", 2}, {"//", 2},
                                             {"mod", 2}, {"max", 2}, {"-", 1}};
  for (int i = 0; i < 50; ++i) {
    auto e = random_expr(rng, 5);
    for (const auto& [op, ar] : ops) {
      std::int64_t got = ev_cost(op, ar, e);
      EXPECT_EQ(got, count_subterms(e, op, ar)) << lang::to_string(e);
      EXPECT_GE(got, 0);
    }
  }
}

// ---------------------------------------------------------- body metrics

TEST(BodyMetrics, IsGoal) {
  auto p = parse_program(":- mode(p/4,[in,in,in,out]).\np(A,B,C,X) :- X is A+B*C.");
  auto m = body_metrics(p.at({"p", 4}).clauses[0], p);
  EXPECT_EQ(m[Metric::arith("+", 2)], 1);
  EXPECT_EQ(m[Metric::arith("*", 2)], 1);
  EXPECT_EQ(m[Metric::builtin("is", 2)], 1);
}

TEST(BodyMetrics, ComparisonsOfVariables) {
  auto p = parse_program("p(A,B) :- A =:= B, B =:= A.");
  auto m = body_metrics(p.at({"p", 2}).clauses[0], p);
  EXPECT_EQ(m[Metric::builtin("=:=", 2)], 2);
  EXPECT_EQ(m.count(Metric::arith("+", 2)), 0u);
}

TEST(BodyMetrics, FactHasNone) {
  auto p = parse_program(kAppend);
  EXPECT_TRUE(body_metrics(p.at({"app", 3}).clauses[0], p).empty());
}

// -------------------------------------------------------- size relations

TEST(SizeRelations, AppendDecrement) {
  auto a = Analyzer::create(parse_program(kAppend));
  auto rel = a->size_relations({"app", 3});
  ASSERT_EQ(rel.size(), 2u);
  EXPECT_TRUE(rel[0].empty());
  ASSERT_EQ(rel[1].size(), 1u);
  EXPECT_EQ(a->render(rel[1][0].in_sizes.at(1)), "n1-1");
  EXPECT_EQ(a->render(rel[1][0].in_sizes.at(2)), "n2");
}

TEST(SizeRelations, HanoiIntDecrement) {
  auto a = Analyzer::create(load_program("hanoi"));
  auto rel = a->size_relations({"hanoi", 5});
  ASSERT_EQ(rel.at(1).size(), 3u);
  EXPECT_EQ(a->render(rel[1][0].in_sizes.at(1)), "n1-1");
  EXPECT_EQ(a->render(rel[1][1].in_sizes.at(1)), "n1-1");
}

TEST(SizeRelations, PassThroughIsIdentity) {
  auto a = Analyzer::create(parse_program(std::string(kAppend) + R"(
:- mode(w/2,[in,out]).
:- measure(w/2,[length,length]).
w(L,R) :- app(L,L,R).
)"));
  auto rel = a->size_relations({"w", 2});
  EXPECT_EQ(a->render(rel[0][0].in_sizes.at(1)), "n1");
  EXPECT_EQ(a->render(rel[0][0].in_sizes.at(2)), "n1");
}

TEST(SizeRelations, UnresolvableSizeIsReported) {
  auto p = parse_program(std::string(kAppend) + R"(
:- mode(u/2,[in,out]).
:- measure(u/2,[length,length]).
u(f(L),R) :- app(L,L,R).
)");
  try {
    predicate_cost(p, {"u", 2}, CostModel::step_only(), Bound::Upper);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Analysis);
    EXPECT_NE(std::string(e.what()).find("unresolvable size"), std::string::npos);
  }
}

TEST(SizeRelations, HintResolvesSize) {
  auto p = parse_program(std::string(kAppend) + R"(
:- mode(u/2,[in,out]).
:- measure(u/2,[size,length]).
:- size(u/2, 1, 1, 1, n1-2).
:- size(u/2, 1, 1, 2, 0).
u(f(L),R) :- app(L,[],R).
)");
  auto fs = predicate_cost(p, {"u", 2}, CostModel::step_only(), Bound::Exact);
  EXPECT_EQ(fs[0].eval({5}), Rational(1 + 4));
}

// ------------------------------------------------------- cost equations

TEST(CostEquation, AppendStep) {
  auto a = Analyzer::create(parse_program(kAppend));
  const auto& r = a->recurrence(a->def({"app", 3}, Quantity::cost(Metric::step())));
  ASSERT_EQ(r.cases.size(), 2u);
  EXPECT_EQ(r.cases[0].guard.str(), "n1=0");
  EXPECT_EQ(a->render(r.cases[0].rhs), "1");
  EXPECT_EQ(r.cases[1].guard.str(), "n1>=1");
  EXPECT_EQ(a->render(r.cases[1].rhs), "1+cost(app/3,step)(n1-1,n2)");
}

TEST(CostEquation, HanoiTwoRecursiveCalls) {
  auto a = Analyzer::create(load_program("hanoi"));
  const auto& r = a->recurrence(a->def({"hanoi", 5}, Quantity::cost(Metric::step())));
  ASSERT_EQ(r.cases.size(), 2u);
  EXPECT_EQ(r.cases[0].guard.str(), "n1=1");
  EXPECT_EQ(r.cases[1].guard.str(), "n1>=2");
  std::string rhs = a->render(r.cases[1].rhs);
  EXPECT_NE(rhs.find("cost(hanoi/5,step)(n1-1)+cost(hanoi/5,step)(n1-1)"), std::string::npos)
      << rhs;
}

TEST(CostEquation, FactOnly) {
  auto a = Analyzer::create(parse_program(":- mode(p/1,[in]).\n:- measure(p/1,[int]).\np(3)."));
  const auto& r = a->recurrence(a->def({"p", 1}, Quantity::cost(Metric::step())));
  ASSERT_EQ(r.cases.size(), 1u);
  EXPECT_EQ(a->render(r.cases[0].rhs), "1");
}

TEST(CostEquation, SolutionCountsMultiplyLaterLiterals) {
  auto p = parse_program(R"(
:- mode(g/1,[out]).
:- measure(g/1,[int]).
:- sols(g/1, 3).
:- trust_cost(g/1, step, 1).
:- size(g/1, 1, 2).
:- mode(h/0,[]).
:- measure(h/0,[]).
h.
:- mode(p/0,[]).
:- measure(p/0,[]).
p :- g(X), h, h.
)");
  auto fs = predicate_cost(p, {"p", 0}, CostModel::step_only(), Bound::Upper);
  EXPECT_EQ(fs[0].eval({}), Rational(1 + 1 + 3 * 1 + 3 * 1));
}

// ---------------------------------------------------------------- solving

TEST(Solve, TelescopingSum) {
  auto a = Analyzer::create({});
  int id = define_linear(*a, Expr::constant(1), 0, [](int self) {
    return Expr::add(Expr::constant(1), self_at(self, 1));
  });
  auto f = a->function(id);
  ASSERT_EQ(f.form(), CostFunction::Form::Closed);
  EXPECT_EQ(f.str(), "n1+1");
  for (int n = 0; n <= 20; ++n) EXPECT_EQ(f.eval({n}), f.eval_recurrence({n}));
}

TEST(Solve, DoublingRecurrence) {
  // f(n) = c0 + 2 f(n-1), f(1) = c1  ->  (c0+c1) 2^(n-1) - c0
  for (auto [c0, c1] : {std::pair{1, 1}, std::pair{3, 5}, std::pair{7, 0}}) {
    auto a = Analyzer::create({});
    int id = define_linear(*a, Expr::constant(c1), 1, [&](int self) {
      return Expr::add(Expr::constant(c0),
                       Expr::mul(Expr::constant(2), self_at(self, 1)));
    });
    auto f = a->function(id);
    ASSERT_EQ(f.form(), CostFunction::Form::Closed);
    for (int n = 1; n <= 20; ++n) {
      Rational expect = Rational(c0 + c1) * rpow(2, n - 1) - c0;
      EXPECT_EQ(f.eval({n}), expect);
      EXPECT_EQ(f.eval_recurrence({n}), expect);
    }
    if (c0 == 1 && c1 == 1) EXPECT_EQ(f.eval({5}), 31);
  }
}

TEST(Solve, SumOfFirstIntegers) {
  auto a = Analyzer::create({});
  int id = define_linear(*a, Expr::constant(0), 0, [](int self) {
    return Expr::add(self_at(self, 1), Expr::variable(1));
  });
  auto f = a->function(id);
  ASSERT_EQ(f.form(), CostFunction::Form::Closed);
  EXPECT_EQ(f.str(), "1/2*n1^2+1/2*n1");
  for (int n = 0; n <= 20; ++n) EXPECT_EQ(f.eval({n}), Rational(n * (n + 1), 2));
}

TEST(Solve, ExponentialInhomogeneity) {
  // f(n) = 2 f(n-1) + n 2^n, f(0) = 1: equal bases need the N^(p+1) term.
  auto a = Analyzer::create({});
  int id = define_linear(*a, Expr::constant(1), 0, [](int self) {
    return Expr::add(
        Expr::mul(Expr::constant(2), self_at(self, 1)),
        Expr::mul(Expr::variable(1), Expr::pow(Expr::constant(2), Expr::variable(1))));
  });
  auto f = a->function(id);
  ASSERT_EQ(f.form(), CostFunction::Form::Closed);
  Rational v = 1;
  for (int n = 1; n <= 20; ++n) {
    v = 2 * v + Rational(n) * rpow(2, n);
    EXPECT_EQ(f.eval({n}), v);
  }
}

TEST(Solve, StepTwoFallsBackToEvaluator) {
  auto a = Analyzer::create({});
  int id = a->next_id();
  Recurrence r;
  r.pred = {"f", 1};
  r.quantity = Quantity::cost(Metric::step());
  r.size_vars = {1};
  r.arity = 1;
  r.cases.push_back({-1, 0, point_guard(1, 0, 1), Expr::constant(1)});
  r.cases.push_back({-1, 0, point_guard(1, 2, std::nullopt),
                     Expr::add(Expr::constant(1), self_at(id, 2))});
  a->define(r);
  auto f = a->function(id);
  EXPECT_EQ(f.form(), CostFunction::Form::Evaluator);
  EXPECT_EQ(f.str(), "evaluator");
  EXPECT_EQ(f.eval({10}), 6);
  EXPECT_EQ(f.eval({11}), 6);
}

TEST(Solve, NonWellFoundedRecurrenceIsAnError) {
  auto p = parse_program(R"(
:- mode(p/1,[in]).
:- measure(p/1,[length]).
p(L) :- p(L).
)");
  try {
    auto fs = predicate_cost(p, {"p", 1}, CostModel::step_only(), Bound::Upper);
    fs[0].eval({2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Analysis);
    EXPECT_NE(std::string(e.what()).find("non-well-founded"), std::string::npos);
  }
}

TEST(Solve, OutOfDomainIsAnError) {
  auto fs = predicate_cost(load_program("hanoi"), {"hanoi", 5}, CostModel::step_only(),
                           Bound::Exact);
  try {
    fs[0].eval({0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Domain);
  }
  EXPECT_THROW(fs[0].eval({-1}), Error);
}

// -------------------------------------------------------- predicate cost

TEST(PredicateCost, AppendStep) {
  auto fs = predicate_cost(parse_program(kAppend), {"app", 3}, CostModel::step_only(),
                           Bound::Exact);
  ASSERT_EQ(fs.size(), 1u);
  EXPECT_EQ(fs[0].str(), "n1+1");
  EXPECT_EQ(fs[0].eval({0}), 1);
  for (int n = 0; n <= 20; ++n) EXPECT_EQ(fs[0].eval({n, 7}), n + 1);
}

TEST(PredicateCost, NrevStep) {
  auto fs = predicate_cost(load_program("nrev"), {"nrev", 2}, CostModel::step_only(),
                           Bound::Exact);
  EXPECT_EQ(fs[0].form(), CostFunction::Form::Closed);
  EXPECT_EQ(fs[0].str(), "1/2*n1^2+3/2*n1+1");
  for (int n = 0; n <= 20; ++n) {
    Rational expect(n * n + 3 * n + 2, 2);
    EXPECT_EQ(fs[0].eval({n}), expect);
    EXPECT_EQ(fs[0].eval_recurrence({n}), expect);
  }
  EXPECT_EQ(fs[0].eval({30}), 496);
}

TEST(PredicateCost, TrustedPassThrough) {
  auto p = parse_program(R"(
:- mode(ext/1,[in]).
:- measure(ext/1,[length]).
:- trust_cost(ext/1, step, 3*n1+2).
)");
  auto fs = predicate_cost(p, {"ext", 1}, CostModel::parse("step,giunif"), Bound::Upper);
  EXPECT_EQ(fs[0].str(), "3*n1+2");
  EXPECT_EQ(fs[1].str(), "0");
}

TEST(PredicateCost, ExactRequiresMutualExclusion) {
  auto q = parse_program(R"(
:- mode(q/1,[in]).
:- measure(q/1,[length]).
q([_|_]).
q([_,_|_]).
)");
  EXPECT_THROW(predicate_cost(q, {"q", 1}, CostModel::step_only(), Bound::Exact), Error);
  auto up = predicate_cost(q, {"q", 1}, CostModel::step_only(), Bound::Upper);
  EXPECT_EQ(up[0].eval({1}), 1);
  EXPECT_EQ(up[0].eval({3}), 2);
}

TEST(PredicateCost, DeclaredMutexAllowsExact) {
  auto q = parse_program(R"(
:- mode(q/1,[in]).
:- measure(q/1,[length]).
:- mutex(q/1, [[1,2]]).
q([_|_]).
q([_,_|_]).
)");
  auto fs = predicate_cost(q, {"q", 1}, CostModel::step_only(), Bound::Exact);
  EXPECT_EQ(fs[0].eval({3}), 1);
}

TEST(PredicateCost, ExportContainsClosedForm) {
  auto fs = predicate_cost(parse_program(kAppend), {"app", 3}, CostModel::all_head(),
                           Bound::Exact);
  std::string text = export_costs(fs);
  EXPECT_NE(text.find("step: n1+1"), std::string::npos) << text;
  EXPECT_NE(text.find("app/3 nargs: 3*n1+3"), std::string::npos) << text;
}

// ------------------------------------------- properties over the benchmarks

struct Bench {
  const char* file;
  lang::PredKey pred;
  int lo, hi;
};

const Bench kBenches[] = {{"append", {"app", 3}, 0, 20},
                          {"nrev", {"nrev", 2}, 0, 20},
                          {"hanoi", {"hanoi", 5}, 1, 12},
                          {"palindrome", {"palindrome", 2}, 0, 20},
                          {"powset", {"powset", 2}, 0, 10},
                          {"evpol", {"evpol", 3}, 0, 20}};

CostModel full_model() {
  return CostModel::parse(
      "all,builtin(is/2),builtin(>/2),arith(+/2),arith(-/2),arith(*/2)");
}

TEST(Properties, ClosedFormAgreesWithEvaluator) {
  for (const auto& b : kBenches) {
    auto fs = predicate_cost(load_program(b.file), b.pred, full_model(), Bound::Exact);
    for (const auto& f : fs) {
      EXPECT_EQ(f.form(), CostFunction::Form::Closed) << b.file << " " << f.quantity().str();
      for (int n = b.lo; n <= b.hi; ++n)
        EXPECT_EQ(at(f, n), f.eval_recurrence({n, 0, 0, 0, 0}))
            << b.file << " " << f.quantity().str() << " n=" << n;
    }
  }
}

TEST(Properties, CostsAreMonotone) {
  for (const auto& b : kBenches) {
    auto fs = predicate_cost(load_program(b.file), b.pred, full_model(), Bound::Exact);
    for (const auto& f : fs)
      for (int n = b.lo; n < b.hi; ++n) {
        EXPECT_LE(at(f, n), at(f, n + 1)) << b.file << " " << f.quantity().str();
        EXPECT_GE(at(f, n), 0);
      }
  }
}

TEST(Properties, EvaluatorHandlesLargeSizes) {
  auto fs = predicate_cost(load_program("nrev"), {"nrev", 2}, CostModel::step_only(),
                           Bound::Exact);
  EXPECT_EQ(fs[0].eval_recurrence({300}), Rational(300 * 300 + 900 + 2, 2));
}

// ----------------------------------------------------------- closed forms

TEST(ClosedFormAlgebra, GeometricPowerSumMatchesDirectSum) {
  for (unsigned p = 0; p <= 3; ++p)
    for (std::uint64_t a : {1u, 2u, 3u})
      for (std::uint64_t b : {1u, 2u, 3u})
        for (std::int64_t n0 : {0, 1, 2}) {
          auto h = geometric_power_sum(1, p, a, b, n0);
          for (std::int64_t N = n0; N <= n0 + 8; ++N) {
            Rational direct = 0;
            for (std::int64_t k = n0 + 1; k <= N; ++k)
              direct += rpow(a, N - k) * rpow(k, p) * rpow(b, k);
            EXPECT_EQ(h.eval({N}), direct) << p << a << b << n0;
          }
        }
}

TEST(ClosedFormAlgebra, SubstituteShiftsExponentials) {
  auto f = ClosedForm::exp(1, 2) + ClosedForm::var(1);
  auto g = f.substitute({{1, ClosedForm::var(1) - ClosedForm::constant(1)}});
  ASSERT_TRUE(g);
  for (int n = 1; n < 10; ++n) EXPECT_EQ(g->eval({n}), f.eval({n - 1}));
  EXPECT_FALSE(ClosedForm::exp(1, 2).substitute({{1, ClosedForm::var(1).pow(2)}}));
}

TEST(ClosedFormAlgebra, Rendering) {
  EXPECT_EQ((ClosedForm::var(1) + ClosedForm::constant(1)).str(), "n1+1");
  EXPECT_EQ((ClosedForm::exp(1, 2).scaled(2) - ClosedForm::constant(1)).str(), "2*2^n1-1");
  EXPECT_EQ(ClosedForm().str(), "0");
}
