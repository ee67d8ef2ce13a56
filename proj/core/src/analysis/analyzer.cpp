#include "costcal/analysis/analyzer.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "costcal/error.hpp"
#include "costcal/lang/measure.hpp"

namespace costcal::analysis {

using lang::Clause;
using lang::LiteralKind;
using lang::Measure;
using lang::Mode;
using lang::PredKey;
using lang::PredicateDecl;
using lang::Term;

// ---------------------------------------------------------------- guards

bool Interval::disjoint(const Interval& o) const {
  if (empty() || o.empty()) return true;
  return (hi && *hi < o.lo) || (o.hi && *o.hi < lo);
}

void Interval::intersect(const Interval& o) {
  lo = std::max(lo, o.lo);
  if (o.hi) hi = hi ? std::min(*hi, *o.hi) : *o.hi;
}

Interval Guard::on(int v) const {
  auto it = vars.find(v);
  return it == vars.end() ? Interval{} : it->second;
}

bool Guard::contains(const std::vector<Integer>& point) const {
  for (const auto& [v, iv] : vars) {
    if (v < 1 || static_cast<std::size_t>(v) > point.size()) return false;
    if (!iv.contains(point[v - 1])) return false;
  }
  return true;
}

bool Guard::empty() const {
  return std::any_of(vars.begin(), vars.end(),
                     [](const auto& kv) { return kv.second.empty(); });
}

bool Guard::trivial() const {
  return std::all_of(vars.begin(), vars.end(),
                     [](const auto& kv) { return kv.second.unbounded(); });
}

namespace {

std::string interval_str(int v, const Interval& iv) {
  std::string n = "n" + std::to_string(v);
  if (iv.empty()) return "false";
  if (iv.hi && *iv.hi == iv.lo) return n + "=" + iv.lo.str();
  if (!iv.hi) return n + ">=" + iv.lo.str();
  if (iv.lo == 0) return n + "=<" + iv.hi->str();
  return iv.lo.str() + "=<" + n + "=<" + iv.hi->str();
}

}  // namespace

std::string Guard::str() const {
  std::string out;
  for (const auto& [v, iv] : vars) {
    if (iv.unbounded()) continue;
    if (!out.empty()) out += ',';
    out += interval_str(v, iv);
  }
  return out.empty() ? "true" : out;
}

std::string Quantity::str() const {
  if (kind == Kind::Cost) return metric.str();
  return "size(" + std::to_string(arg) + ")";
}

// ---------------------------------------------------------- clause counts

EventMap head_metrics(const Clause& c, const PredicateDecl& decl) {
  const int n = c.head.arity();
  if (!decl.has_modes() || static_cast<int>(decl.modes.size()) != n)
    throw Error(ErrorKind::Analysis,
                "missing mode declaration for " + c.key().str());
  EventMap m{{Metric::step(), 1},   {Metric::nargs(), n},
             {Metric::giunif(), 0}, {Metric::gounif(), 0},
             {Metric::viunif(), 0}, {Metric::vounif(), 0}};
  for (int i = 0; i < n; ++i) {
    const Term& a = c.head.arg(i);
    bool in = decl.modes[i] == Mode::In;
    if (a.is_var()) {
      ++m[in ? Metric::viunif() : Metric::vounif()];
    } else {
      m[in ? Metric::giunif() : Metric::gounif()] +=
          static_cast<std::int64_t>(lang::symbol_count(a));
    }
  }
  return m;
}

namespace {

void count_ops(const Term& t, EventMap& out) {
  if (!t.is_compound()) return;
  PredKey k = lang::key_of(t);
  if (!lang::is_arith_op(k))
    throw Error(ErrorKind::Analysis, "non-arithmetic functor " + k.str() +
                                         " in arithmetic expression");
  ++out[Metric::arith(k.name, k.arity)];
  for (const auto& a : t.as_compound().args) count_ops(a, out);
}

}  // namespace

std::int64_t ev_cost(const std::string& op, int arity, const Term& a) {
  if (!a.is_compound()) return 0;
  PredKey k = lang::key_of(a);
  if (!lang::is_arith_op(k))
    throw Error(ErrorKind::Analysis, "non-arithmetic functor " + k.str() +
                                         " in arithmetic expression");
  std::int64_t sum = (k.name == op && k.arity == arity) ? 1 : 0;
  for (const auto& x : a.as_compound().args) sum += ev_cost(op, arity, x);
  return sum;
}

namespace {

EventMap literal_events(const lang::Literal& l) {
  EventMap m;
  if (l.kind == LiteralKind::Call) return m;
  PredKey k = l.key();
  ++m[Metric::builtin(k.name, k.arity)];
  if (l.kind == LiteralKind::Arith) {
    count_ops(l.goal.arg(1), m);
  } else if (lang::is_comparison(k)) {
    count_ops(l.goal.arg(0), m);
    count_ops(l.goal.arg(1), m);
  }
  return m;
}

}  // namespace

EventMap body_metrics(const Clause& c, const lang::Program&) {
  EventMap m;
  for (const auto& l : c.body)
    for (const auto& [k, v] : literal_events(l)) m[k] += v;
  return m;
}

std::vector<std::int64_t> input_sizes(const Term& goal, const PredicateDecl& decl) {
  const int n = goal.arity();
  if (static_cast<int>(decl.modes.size()) != n ||
      static_cast<int>(decl.measures.size()) != n)
    throw Error(ErrorKind::Input, "goal " + lang::to_string(goal) +
                                      " does not match the declaration of " +
                                      decl.key.str());
  std::vector<std::int64_t> out(n, 0);
  for (int i = 0; i < n; ++i) {
    if (decl.modes[i] != Mode::In || decl.measures[i] == Measure::None) continue;
    auto s = lang::measure(goal.arg(i), decl.measures[i]);
    if (!s)
      throw Error(ErrorKind::Input, "argument " + std::to_string(i + 1) + " of " +
                                        lang::to_string(goal) + " has no " +
                                        lang::to_string(decl.measures[i]) +
                                        " size");
    out[i] = *s;
  }
  return out;
}

// ------------------------------------------------------ per-clause facts

namespace {

std::vector<int> sized_inputs(const PredicateDecl& d) {
  std::vector<int> out;
  for (std::size_t i = 0; i < d.modes.size() && i < d.measures.size(); ++i)
    if (d.modes[i] == Mode::In && d.measures[i] != Measure::None)
      out.push_back(static_cast<int>(i) + 1);
  return out;
}

using Env = std::map<std::pair<std::uint64_t, Measure>, ExprPtr>;

// Size of `t` under `m` given the sizes known for variables.
ExprPtr measure_expr(const Term& t, Measure m, const Env& env) {
  if (t.is_var()) {
    auto it = env.find({t.as_var().id, m});
    if (it != env.end()) return it->second;
    return Expr::unknown("no " + lang::to_string(m) + " size for variable " +
                         t.as_var().name);
  }
  if (auto s = lang::measure(t, m)) return Expr::constant(*s);
  switch (m) {
    case Measure::ListLength: {
      std::int64_t k = 0;
      const Term* cur = &t;
      while (cur->is_cons()) {
        ++k;
        cur = &cur->arg(1);
      }
      if (cur->is_var()) return Expr::add(Expr::constant(k), measure_expr(*cur, m, env));
      return Expr::unknown(lang::to_string(t) + " is not a list");
    }
    case Measure::TermSize: {
      if (!t.is_compound()) return Expr::constant(1);
      ExprPtr s = Expr::constant(1);
      for (const auto& a : t.as_compound().args) s = Expr::add(s, measure_expr(a, m, env));
      return s;
    }
    case Measure::TermDepth: {
      if (!t.is_compound()) return Expr::constant(0);
      ExprPtr d = Expr::constant(0);
      for (const auto& a : t.as_compound().args) d = Expr::max(d, measure_expr(a, m, env));
      return Expr::add(Expr::constant(1), d);
    }
    case Measure::IntValue:
      return Expr::unknown(lang::to_string(t) + " is not a natural number");
    case Measure::None:
      return Expr::constant(0);
  }
  return Expr::unknown("unsupported measure");
}

ExprPtr arith_size(const Term& t, const Env& env) {
  if (t.is_int()) return Expr::constant(t.as_int());
  if (t.is_var()) return measure_expr(t, Measure::IntValue, env);
  if (t.is_compound()) {
    auto f = t.functor();
    if (t.arity() == 2 && (f == "+" || f == "-" || f == "*")) {
      auto a = arith_size(t.arg(0), env), b = arith_size(t.arg(1), env);
      if (f == "+") return Expr::add(a, b);
      if (f == "-") return Expr::sub(a, b);
      return Expr::mul(a, b);
    }
  }
  return Expr::unknown("no size rule for " + lang::to_string(t));
}

// Single occurrence of a variable inside `t`, with its depth; nullopt when
// `t` has zero or several variable occurrences.
struct VarSite {
  const lang::Var* var = nullptr;
  int depth = 0;
  bool siblings_atomic = true;
};

void find_vars(const Term& t, int depth, std::vector<VarSite>& out, bool& atomic_ok) {
  if (t.is_var()) {
    out.push_back({&t.as_var(), depth, true});
    return;
  }
  if (!t.is_compound()) return;
  const auto& args = t.as_compound().args;
  int vars_below = 0;
  std::size_t before = out.size();
  for (const auto& a : args) find_vars(a, depth + 1, out, atomic_ok);
  vars_below = static_cast<int>(out.size() - before);
  if (vars_below > 0)
    for (const auto& a : args)
      if (a.is_compound() && lang::measure(a, Measure::TermDepth)) atomic_ok = false;
}

// Decomposes head input argument `t` (position v, measure m).
void decompose_head(const Term& t, int v, Measure m, Env& env, Guard& g) {
  Interval& iv = g.vars[v];
  auto set_exact = [&](std::int64_t s) { iv.intersect({s, Integer(s)}); };
  auto set_empty = [&] { iv.intersect({1, Integer(0)}); };
  if (t.is_var()) {
    env.emplace(std::make_pair(t.as_var().id, m), Expr::variable(v));
    return;
  }
  if (auto s = lang::measure(t, m)) {
    set_exact(*s);
    return;
  }
  switch (m) {
    case Measure::ListLength: {
      std::int64_t k = 0;
      const Term* cur = &t;
      while (cur->is_cons()) {
        ++k;
        cur = &cur->arg(1);
      }
      if (cur->is_var()) {
        iv.intersect({k, std::nullopt});
        env.emplace(std::make_pair(cur->as_var().id, m),
                    Expr::sub(Expr::variable(v), Expr::constant(k)));
      } else if (!cur->is_nil()) {
        set_empty();
      }
      return;
    }
    case Measure::IntValue:
      set_empty();  // a non-integer pattern never matches a natural
      return;
    case Measure::TermSize:
    case Measure::TermDepth: {
      std::vector<VarSite> sites;
      bool atomic_ok = true;
      find_vars(t, 0, sites, atomic_ok);
      if (sites.size() != 1) return;
      if (m == Measure::TermSize) {
        std::int64_t k = static_cast<std::int64_t>(lang::symbol_count(t));
        iv.intersect({k, std::nullopt});
        env.emplace(std::make_pair(sites[0].var->id, m),
                    Expr::sub(Expr::variable(v), Expr::constant(k - 1)));
      } else if (atomic_ok) {
        int d = sites[0].depth;
        iv.intersect({d, std::nullopt});
        env.emplace(std::make_pair(sites[0].var->id, m),
                    Expr::sub(Expr::variable(v), Expr::constant(d)));
      }
      return;
    }
    case Measure::None:
      return;
  }
}

// Tightens the guard from `X op c` with X the head integer size variable.
void tighten(const Term& goal, const Env& env, Guard& g) {
  std::string op(goal.functor());
  const Term* x = &goal.arg(0);
  const Term* c = &goal.arg(1);
  if (!x->is_var() && c->is_var()) {
    std::swap(x, c);
    if (op == "<") op = ">";
    else if (op == ">") op = "<";
    else if (op == "=<") op = ">=";
    else if (op == ">=") op = "=<";
  }
  if (!x->is_var() || !c->is_int()) return;
  auto it = env.find({x->as_var().id, Measure::IntValue});
  if (it == env.end() || it->second->kind != ExprKind::Var) return;
  Interval& iv = g.vars[it->second->var];
  Integer k = c->as_int();
  if (op == ">") iv.intersect({k + 1, std::nullopt});
  else if (op == ">=") iv.intersect({k, std::nullopt});
  else if (op == "<") iv.intersect({0, Integer(k - 1)});
  else if (op == "=<") iv.intersect({0, k});
  else if (op == "=:=") iv.intersect({k, k});
  if (iv.lo < 0) iv.lo = 0;
}

}  // namespace

struct Analyzer::PredInfo {
  struct Lit {
    int index = 0;
    LiteralKind kind = LiteralKind::Call;
    PredKey key;
    std::map<int, ExprPtr> in_sizes;
    std::vector<ExprPtr> call_args;  // indexed by callee position
    ExprPtr pre;                     // product of earlier solution counts
    EventMap events;
  };
  struct ClauseInfo {
    Guard guard;
    EventMap head;
    std::vector<Lit> lits;
    std::map<int, ExprPtr> head_out;
  };
  std::vector<ClauseInfo> clauses;
  std::vector<std::vector<int>> groups;
};

const Analyzer::PredInfo& Analyzer::pred_info(const PredKey& pred) {
  if (auto it = infos_.find(pred); it != infos_.end()) return *it->second;
  const auto& P = program_.at(pred);
  const auto& decl = P.decl;
  if (!decl.has_modes() || !decl.has_measures())
    throw Error(ErrorKind::Analysis, "missing mode/measure declaration for " + pred.str());
  auto info = std::make_shared<PredInfo>();
  for (std::size_t ci = 0; ci < P.clauses.size(); ++ci) {
    const Clause& c = P.clauses[ci];
    PredInfo::ClauseInfo ck;
    ck.head = head_metrics(c, decl);
    Env env;
    for (int v : sized_inputs(decl)) {
      ck.guard.vars[v];
      decompose_head(c.head.arg(v - 1), v, decl.measures[v - 1], env, ck.guard);
    }
    bool leading = true;
    ExprPtr pre = Expr::constant(1);
    for (std::size_t li = 0; li < c.body.size(); ++li) {
      const auto& l = c.body[li];
      PredInfo::Lit L;
      L.index = static_cast<int>(li);
      L.kind = l.kind;
      L.key = l.key();
      L.pre = pre;
      L.events = literal_events(l);
      if (l.kind == LiteralKind::Builtin) {
        if (leading && lang::is_comparison(L.key)) tighten(l.goal, env, ck.guard);
      } else if (l.kind == LiteralKind::Arith) {
        leading = false;
        if (l.goal.arg(0).is_var())
          env.emplace(std::make_pair(l.goal.arg(0).as_var().id, Measure::IntValue),
                      arith_size(l.goal.arg(1), env));
      } else {
        leading = false;
        const auto* q = program_.find(L.key);
        if (!q)
          throw Error(ErrorKind::Analysis, "call to undefined predicate " + L.key.str());
        const auto& qd = q->decl;
        if (!qd.has_modes() || !qd.has_measures())
          throw Error(ErrorKind::Analysis,
                      "missing mode/measure declaration for " + L.key.str());
        L.call_args.assign(L.key.arity, nullptr);
        for (int j : sized_inputs(qd)) {
          ExprPtr s;
          for (const auto& h : decl.size_hints)
            if (h.clause == static_cast<int>(ci) + 1 &&
                h.literal == static_cast<int>(li) + 1 && h.arg == j)
              s = expr_from_term(h.expr);
          if (!s) s = measure_expr(l.goal.arg(j - 1), qd.measures[j - 1], env);
          L.in_sizes[j] = s;
          L.call_args[j - 1] = s;
        }
        for (int j = 1; j <= L.key.arity; ++j) {
          if (qd.modes[j - 1] != Mode::Out || qd.measures[j - 1] == Measure::None)
            continue;
          const Term& a = l.goal.arg(j - 1);
          if (!a.is_var()) continue;
          env.emplace(std::make_pair(a.as_var().id, qd.measures[j - 1]),
                      Expr::call(def(L.key, Quantity::out_size(j)), L.call_args));
        }
        if (qd.sols) {
          std::map<int, ExprPtr> sub(L.in_sizes.begin(), L.in_sizes.end());
          pre = Expr::mul(pre, substitute(expr_from_term(*qd.sols), sub));
        }
      }
      ck.lits.push_back(std::move(L));
    }
    for (int j = 1; j <= pred.arity; ++j)
      if (decl.modes[j - 1] == Mode::Out && decl.measures[j - 1] != Measure::None)
        ck.head_out[j] = measure_expr(c.head.arg(j - 1), decl.measures[j - 1], env);
    info->clauses.push_back(std::move(ck));
  }

  if (decl.mutex_groups) {
    info->groups = *decl.mutex_groups;
  } else {
    // One group when guards are pairwise disjoint on the first sized input.
    const std::size_t n = info->clauses.size();
    auto ins = sized_inputs(decl);
    bool disjoint = n <= 1;
    if (!ins.empty() && n > 1) {
      disjoint = true;
      for (std::size_t a = 0; a < n && disjoint; ++a)
        for (std::size_t b = a + 1; b < n && disjoint; ++b)
          if (!info->clauses[a].guard.on(ins[0]).disjoint(info->clauses[b].guard.on(ins[0])))
            disjoint = false;
    }
    if (disjoint) {
      std::vector<int> all;
      for (std::size_t i = 0; i < n; ++i) all.push_back(static_cast<int>(i));
      info->groups.push_back(all);
    } else {
      for (std::size_t i = 0; i < n; ++i) info->groups.push_back({static_cast<int>(i)});
    }
  }
  return *infos_.emplace(pred, info).first->second;
}

// ------------------------------------------------------------ definitions

std::shared_ptr<Analyzer> Analyzer::create(lang::Program program) {
  return std::shared_ptr<Analyzer>(new Analyzer(std::move(program)));
}

int Analyzer::def(const PredKey& pred, const Quantity& q) {
  std::lock_guard lock(mu_);
  auto key = std::make_pair(pred, q);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  int id = next_id();
  Def d;
  d.rec.pred = pred;
  d.rec.quantity = q;
  defs_.push_back(std::move(d));
  index_.emplace(key, id);
  return id;
}

int Analyzer::define(Recurrence r) {
  std::lock_guard lock(mu_);
  int id = next_id();
  Def d;
  d.rec = std::move(r);
  d.built = true;
  defs_.push_back(std::move(d));
  return id;
}

const Recurrence& Analyzer::recurrence(int id) {
  std::lock_guard lock(mu_);
  ensure_built(id);
  return defs_.at(id).rec;
}

std::string Analyzer::def_name(int id) const {
  const auto& r = defs_.at(id).rec;
  if (r.quantity.kind == Quantity::Kind::OutSize)
    return "size(" + r.pred.str() + "," + std::to_string(r.quantity.arg) + ")";
  return "cost(" + r.pred.str() + "," + r.quantity.metric.str() + ")";
}

std::string Analyzer::render(const ExprPtr& e) const {
  return print_expr(e, [this](int id) { return def_name(id); });
}

void Analyzer::ensure_built(int id) {
  Def& d = defs_.at(id);
  if (d.built) return;
  d.built = true;
  Recurrence& r = d.rec;
  const auto& P = program_.at(r.pred);
  const auto& decl = P.decl;
  r.arity = r.pred.arity;
  r.size_vars = sized_inputs(decl);
  const Quantity q = r.quantity;
  auto trusted_case = [&](const Term& t) {
    r.trusted = true;
    r.cases.push_back({-1, 0, Guard{}, expr_from_term(t)});
    r.groups = 1;
  };
  if (q.kind == Quantity::Kind::Cost) {
    for (const auto& [name, t] : decl.trust_cost)
      if (Metric::parse(name) == q.metric) {
        trusted_case(t);
        return;
      }
    if (P.clauses.empty()) {
      // Trusted predicate without an entry for this metric: no events.
      r.trusted = true;
      r.cases.push_back({-1, 0, Guard{}, Expr::constant(0)});
      return;
    }
  } else {
    if (auto it = decl.out_size.find(q.arg); it != decl.out_size.end()) {
      trusted_case(it->second);
      return;
    }
    if (P.clauses.empty())
      throw Error(ErrorKind::Analysis, "no output size for argument " +
                                           std::to_string(q.arg) + " of " +
                                           r.pred.str() + "; add a size assertion");
  }

  const PredInfo& info = pred_info(r.pred);
  r.groups = static_cast<int>(info.groups.size());
  std::vector<int> group_of(info.clauses.size(), 0);
  for (std::size_t g = 0; g < info.groups.size(); ++g)
    for (int c : info.groups[g]) group_of.at(c) = static_cast<int>(g);

  auto where = [&](std::size_t ci) {
    return "clause " + std::to_string(ci + 1) + " of " + r.pred.str();
  };
  for (std::size_t ci = 0; ci < info.clauses.size(); ++ci) {
    const auto& ck = info.clauses[ci];
    ExprPtr rhs;
    if (q.kind == Quantity::Kind::OutSize) {
      rhs = ck.head_out.at(q.arg);
      if (has_unknown(rhs))
        throw Error(ErrorKind::Analysis, "unresolvable size of output argument " +
                                             std::to_string(q.arg) + " in " +
                                             where(ci) + ": " + unknown_note(rhs));
    } else {
      auto h = ck.head.find(q.metric);
      rhs = Expr::constant(h == ck.head.end() ? 0 : h->second);
      for (const auto& L : ck.lits) {
        ExprPtr term;
        if (L.kind == LiteralKind::Call) {
          for (const auto& [j, s] : L.in_sizes)
            if (has_unknown(s))
              throw Error(ErrorKind::Analysis,
                          "unresolvable size of argument " + std::to_string(j) +
                              " of " + L.key.str() + " (literal " +
                              std::to_string(L.index + 1) + ") in " + where(ci) +
                              ": " + unknown_note(s));
          term = Expr::call(def(L.key, q), L.call_args);
        } else {
          auto e = L.events.find(q.metric);
          if (e == L.events.end()) continue;
          term = Expr::constant(e->second);
        }
        if (has_unknown(L.pre))
          throw Error(ErrorKind::Analysis, "unresolvable solution count in " +
                                               where(ci) + ": " + unknown_note(L.pre));
        rhs = Expr::add(rhs, Expr::mul(L.pre, term));
      }
    }
    r.cases.push_back({static_cast<int>(ci), group_of[ci], ck.guard, rhs});
  }
}

std::vector<std::vector<LiteralSizes>> Analyzer::size_relations(const PredKey& pred) {
  std::lock_guard lock(mu_);
  std::vector<std::vector<LiteralSizes>> out;
  for (const auto& ck : pred_info(pred).clauses) {
    auto& row = out.emplace_back();
    for (const auto& L : ck.lits)
      if (L.kind == LiteralKind::Call) row.push_back({L.index, L.key, L.in_sizes});
  }
  return out;
}

// ------------------------------------------------------------- evaluation

Rational Analyzer::evaluate(int id, const std::vector<Integer>& point) {
  std::lock_guard lock(mu_);
  return eval_locked(id, point);
}

Rational Analyzer::eval_locked(int id, const std::vector<Integer>& point) {
  ensure_built(id);
  Def& d = defs_.at(id);
  const Recurrence& r = d.rec;
  std::vector<Integer> key;
  for (int v : r.size_vars) {
    if (v < 1 || static_cast<std::size_t>(v) > point.size())
      throw Error(ErrorKind::Domain, "missing size for argument " + std::to_string(v) +
                                         " of " + r.pred.str());
    if (point[v - 1] < 0)
      throw Error(ErrorKind::Domain, "negative size for argument " + std::to_string(v) +
                                         " of " + r.pred.str());
    key.push_back(point[v - 1]);
  }
  if (auto it = d.memo.find(key); it != d.memo.end()) return it->second;
  auto pk = std::make_pair(id, key);
  auto point_str = [&] {
    std::string s;
    for (std::size_t i = 0; i < key.size(); ++i)
      s += (i ? "," : "") + std::string("n") + std::to_string(r.size_vars[i]) + "=" +
           key[i].str();
    return s;
  };
  if (in_progress_.count(pk))
    throw Error(ErrorKind::Analysis, "non-well-founded recurrence: " + def_name(id) +
                                         " depends on itself at " + point_str());
  in_progress_[pk] = true;
  struct Leave {
    std::map<std::pair<int, std::vector<Integer>>, bool>& m;
    std::pair<int, std::vector<Integer>> k;
    ~Leave() { m.erase(k); }
  } leave{in_progress_, pk};

  auto var = [&](int v) -> Integer {
    if (v < 1 || static_cast<std::size_t>(v) > point.size())
      throw Error(ErrorKind::Domain, "size variable n" + std::to_string(v) +
                                         " out of range for " + r.pred.str());
    return point[v - 1];
  };
  auto call = [&](int callee, const std::vector<Integer>& args) {
    return eval_locked(callee, args);
  };
  const bool is_cost = r.quantity.kind == Quantity::Kind::Cost;
  std::vector<std::optional<Rational>> per_group(std::max(r.groups, 1));
  bool any = false;
  for (const auto& c : r.cases) {
    if (!c.guard.contains(point)) continue;
    Rational v = eval_expr(c.rhs, var, call);
    any = true;
    auto& slot = per_group.at(is_cost ? c.group : 0);
    slot = slot ? std::max(*slot, v) : v;
  }
  if (!any)
    throw Error(ErrorKind::Domain, "no clause of " + r.pred.str() + " applies at " +
                                       point_str());
  Rational total = 0;
  for (const auto& g : per_group)
    if (g) total += *g;
  d.memo.emplace(key, total);
  return total;
}

// ---------------------------------------------------------------- solving

namespace {

struct SelfCall {
  ClosedForm coeff;
  std::map<int, ClosedForm> args;
};

struct Lin {
  ClosedForm rest;
  std::vector<SelfCall> calls;

  Lin scaled(const ClosedForm& k) const {
    Lin out{rest * k, calls};
    for (auto& c : out.calls) c.coeff = c.coeff * k;
    return out;
  }
  Lin operator+(const Lin& o) const {
    Lin out{rest + o.rest, calls};
    out.calls.insert(out.calls.end(), o.calls.begin(), o.calls.end());
    return out;
  }
};

bool mentions(const ExprPtr& e, int id) {
  if (!e) return false;
  if (e->kind == ExprKind::Call && e->def == id) return true;
  return std::any_of(e->args.begin(), e->args.end(),
                     [&](const ExprPtr& a) { return mentions(a, id); });
}

ClosedForm monomial_form(const Monomial& m, const Rational& c) {
  ClosedForm f = ClosedForm::constant(c);
  for (const auto& [v, fac] : m.factors)
    f = f * ClosedForm::var(v).pow(fac.pow) * ClosedForm::exp(v, fac.base);
  return f;
}

}  // namespace

std::optional<ClosedForm> Analyzer::closed_form(int id) {
  std::lock_guard lock(mu_);
  return solve_locked(id);
}

std::optional<ClosedForm> Analyzer::solve_locked(int id) {
  ensure_built(id);
  Def& d = defs_.at(id);
  if (d.solve == Def::Solve::Done) return d.closed;
  if (d.solve == Def::Solve::Running) return std::nullopt;
  d.solve = Def::Solve::Running;
  try {
    Guard dom;
    auto f = solve_shape(id, dom);
    if (f && !self_check(id, *f, dom)) f.reset();
    Def& dd = defs_.at(id);
    dd.closed = f;
    dd.domain = dom;
    dd.solve = Def::Solve::Done;
    return f;
  } catch (...) {
    defs_.at(id).solve = Def::Solve::Done;
    throw;
  }
}

std::optional<ClosedForm> Analyzer::solve_shape(int id, Guard& domain) {
  const Recurrence r = defs_.at(id).rec;
  auto callee = [&](int other) { return solve_locked(other); };

  std::function<std::optional<Lin>(const ExprPtr&)> lin =
      [&](const ExprPtr& e) -> std::optional<Lin> {
    switch (e->kind) {
      case ExprKind::Add:
      case ExprKind::Sub: {
        auto a = lin(e->args[0]), b = lin(e->args[1]);
        if (!a || !b) return std::nullopt;
        if (e->kind == ExprKind::Sub) *b = b->scaled(ClosedForm::constant(-1));
        return *a + *b;
      }
      case ExprKind::Mul: {
        auto a = lin(e->args[0]), b = lin(e->args[1]);
        if (!a || !b) return std::nullopt;
        if (a->calls.empty()) return b->scaled(a->rest);
        if (b->calls.empty()) return a->scaled(b->rest);
        return std::nullopt;
      }
      case ExprKind::Call: {
        if (e->def == id) {
          SelfCall sc{ClosedForm::constant(1), {}};
          for (std::size_t i = 0; i < e->args.size(); ++i) {
            if (!e->args[i]) continue;
            if (mentions(e->args[i], id)) return std::nullopt;
            auto a = to_closed(e->args[i], callee);
            if (!a) return std::nullopt;
            sc.args.emplace(static_cast<int>(i) + 1, *a);
          }
          return Lin{ClosedForm{}, {sc}};
        }
        auto cf = solve_locked(e->def);
        if (!cf) return std::nullopt;
        std::map<int, Lin> args;
        for (std::size_t i = 0; i < e->args.size(); ++i) {
          if (!e->args[i]) continue;
          auto a = lin(e->args[i]);
          if (!a) return std::nullopt;
          args.emplace(static_cast<int>(i) + 1, *a);
        }
        Lin out;
        for (const auto& [m, c] : cf->terms()) {
          Monomial pure;
          int impure = 0, impure_var = 0;
          for (const auto& [v, fac] : m.factors) {
            auto it = args.find(v);
            if (it == args.end()) return std::nullopt;
            if (it->second.calls.empty()) {
              pure.factors[v] = fac;
            } else {
              if (fac.pow != 1 || fac.base != 1) return std::nullopt;
              ++impure;
              impure_var = v;
            }
          }
          if (impure > 1) return std::nullopt;
          std::map<int, ClosedForm> sub;
          for (const auto& [v, fac] : pure.factors) sub.emplace(v, args.at(v).rest);
          auto k = monomial_form(pure, c).substitute(sub);
          if (!k) return std::nullopt;
          if (impure == 0) {
            out.rest = out.rest + *k;
          } else {
            out = out + args.at(impure_var).scaled(*k);
          }
        }
        return out;
      }
      default: {
        if (mentions(e, id)) return std::nullopt;
        auto f = to_closed(e, callee);
        if (!f) return std::nullopt;
        return Lin{*f, {}};
      }
    }
  };

  std::vector<std::pair<const RecurrenceCase*, Lin>> cases;
  for (const auto& c : r.cases) {
    if (c.guard.empty()) continue;
    auto l = lin(c.rhs);
    if (!l) return std::nullopt;
    cases.emplace_back(&c, *l);
  }
  if (cases.empty()) return std::nullopt;
  const bool is_cost = r.quantity.kind == Quantity::Kind::Cost;

  std::vector<std::size_t> rec, base;
  for (std::size_t i = 0; i < cases.size(); ++i)
    (cases[i].second.calls.empty() ? base : rec).push_back(i);

  if (rec.empty()) {
    const Guard& g0 = cases[0].first->guard;
    for (const auto& [c, l] : cases)
      if (!(c->guard == g0)) return std::nullopt;
    if (cases.size() == 1) {
      domain = g0;
      return cases[0].second.rest;
    }
    bool same = std::all_of(cases.begin(), cases.end(), [&](const auto& x) {
      return x.second.rest == cases[0].second.rest;
    });
    if (same && (!is_cost || r.groups == 1)) {
      domain = g0;
      return cases[0].second.rest;
    }
    if (is_cost) {
      std::map<int, int> per_group;
      for (const auto& [c, l] : cases) ++per_group[c->group];
      bool singletons = std::all_of(per_group.begin(), per_group.end(),
                                    [](const auto& kv) { return kv.second == 1; });
      if (singletons) {
        ClosedForm sum;
        for (const auto& [c, l] : cases) sum = sum + l.rest;
        domain = g0;
        return sum;
      }
    }
    return std::nullopt;
  }

  if (rec.size() != 1 || base.size() != 1) return std::nullopt;
  const auto& [R, rl] = cases[rec[0]];
  const auto& [B, bl] = cases[base[0]];

  // All self-calls must reduce the same single variable by one.
  int drive = 0;
  Rational a = 0;
  for (const auto& sc : rl.calls) {
    if (!sc.coeff.is_constant()) return std::nullopt;
    int moved = 0, v_here = 0;
    for (int v : r.size_vars) {
      auto it = sc.args.find(v);
      if (it == sc.args.end()) return std::nullopt;
      if (it->second == ClosedForm::var(v)) continue;
      auto aff = it->second.as_affine();
      if (!aff || aff->var != v || aff->scale != 1 || aff->offset >= 0) return std::nullopt;
      if (aff->offset != -1) return std::nullopt;  // larger steps: evaluator
      ++moved;
      v_here = v;
    }
    if (moved == 0)
      throw Error(ErrorKind::Analysis, "non-well-founded recurrence: " + def_name(id) +
                                           " calls itself at unchanged sizes");
    if (moved != 1 || (drive && v_here != drive)) return std::nullopt;
    drive = v_here;
    a += sc.coeff.constant_value();
  }
  if (!is_integer(a) || a < 1) return std::nullopt;

  Interval bv = B->guard.on(drive), rv = R->guard.on(drive);
  if (!bv.hi || *bv.hi != bv.lo || rv.hi || rv.lo != bv.lo + 1) return std::nullopt;
  for (int v : r.size_vars)
    if (v != drive && !(B->guard.on(v) == R->guard.on(v))) return std::nullopt;
  const Integer n0 = bv.lo;
  if (n0 > 1000) return std::nullopt;
  const std::int64_t n0i = n0.convert_to<std::int64_t>();

  std::map<int, ClosedForm> at_n0;
  for (int v : bl.rest.vars())
    at_n0.emplace(v, v == drive ? ClosedForm::constant(Rational(n0)) : ClosedForm::var(v));
  auto b0 = bl.rest.substitute(at_n0);
  if (!b0) return std::nullopt;

  const std::uint64_t ai = to_integer(a).convert_to<std::uint64_t>();
  ClosedForm f = ClosedForm::exp(drive, ai).scaled(rpow(a, -n0i)) * *b0;
  for (const auto& [m, c] : rl.rest.terms()) {
    Monomial other = m;
    Monomial::Factor fac;
    if (auto it = other.factors.find(drive); it != other.factors.end()) {
      fac = it->second;
      other.factors.erase(it);
    }
    f = f + monomial_form(other, c) *
                geometric_power_sum(drive, fac.pow, ai, fac.base, n0i);
  }
  domain = R->guard;
  domain.vars[drive] = Interval{n0, std::nullopt};
  return f;
}

bool Analyzer::self_check(int id, const ClosedForm& f, const Guard& dom) {
  const Recurrence& r = defs_.at(id).rec;
  const int arity = std::max(r.arity, r.size_vars.empty() ? 0 : r.size_vars.back());
  const int span = r.size_vars.size() <= 1 ? 9 : (r.size_vars.size() == 2 ? 5 : 3);
  std::vector<Integer> point(arity, 0);
  int checked = 0;
  bool ok = true;
  std::function<void(std::size_t)> walk = [&](std::size_t k) {
    if (!ok) return;
    if (k == r.size_vars.size()) {
      Rational want;
      try {
        want = eval_locked(id, point);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::Domain) return;
        throw;
      }
      ++checked;
      try {
        if (f.eval([&](int v) { return point.at(v - 1); }) != want) ok = false;
      } catch (const Error&) {
        ok = false;
      }
      return;
    }
    int v = r.size_vars[k];
    Interval iv = dom.on(v);
    for (Integer x = iv.lo; x < iv.lo + span && iv.contains(x); ++x) {
      point[v - 1] = x;
      walk(k + 1);
    }
  };
  walk(0);
  return ok && checked > 0;
}

CostFunction Analyzer::function(int id) {
  std::lock_guard lock(mu_);
  CostFunction cf;
  cf.session_ = shared_from_this();
  cf.def_ = id;
  cf.closed_ = solve_locked(id);
  cf.domain_ = defs_.at(id).domain;
  return cf;
}

void Analyzer::check_exact(const PredKey& pred) {
  std::set<PredKey> seen;
  std::vector<PredKey> todo{pred};
  while (!todo.empty()) {
    PredKey k = todo.back();
    todo.pop_back();
    if (!seen.insert(k).second) continue;
    const auto& P = program_.at(k);
    if (P.clauses.empty()) continue;
    if (pred_info(k).groups.size() > 1)
      throw Error(ErrorKind::Analysis, "exact bound requested but the clauses of " +
                                           k.str() + " are not mutually exclusive");
    for (const auto& c : P.clauses)
      for (const auto& l : c.body)
        if (l.kind == LiteralKind::Call) todo.push_back(l.key());
  }
}

std::vector<CostFunction> Analyzer::predicate_cost(const PredKey& pred,
                                                   const CostModel& model, Bound bound) {
  std::lock_guard lock(mu_);
  if (bound == Bound::Exact) check_exact(pred);
  std::vector<CostFunction> out;
  for (const auto& m : model.components()) out.push_back(function(def(pred, Quantity::cost(m))));
  return out;
}

// ----------------------------------------------------------- CostFunction

const Recurrence& CostFunction::recurrence() const { return session_->recurrence(def_); }

namespace {

std::vector<Integer> to_point(const std::vector<std::int64_t>& sizes) {
  std::vector<Integer> p;
  for (auto s : sizes) {
    if (s < 0) throw Error(ErrorKind::Domain, "negative input size");
    p.emplace_back(s);
  }
  return p;
}

}  // namespace

Rational CostFunction::eval(const std::vector<std::int64_t>& sizes) const {
  auto point = to_point(sizes);
  if (closed_) {
    // Positions the closed form ignores may be left out.
    const auto& r = recurrence();
    bool complete = true;
    for (int v : r.size_vars)
      if (static_cast<std::size_t>(v) > point.size() && closed_->depends_on(v))
        complete = false;
    for (int v : r.size_vars) {
      if (!complete || static_cast<std::size_t>(v) <= point.size()) continue;
      point.resize(v, 0);
      point[v - 1] = domain_.on(v).lo;
    }
    if (complete && domain_.contains(point))
      return closed_->eval([&](int v) { return point.at(v - 1); });
  }
  return session_->evaluate(def_, point);
}

Rational CostFunction::eval_recurrence(const std::vector<std::int64_t>& sizes) const {
  return session_->evaluate(def_, to_point(sizes));
}

std::string CostFunction::str() const { return closed_ ? closed_->str() : "evaluator"; }

std::string CostFunction::domain() const {
  const Recurrence& r = recurrence();
  if (closed_) {
    std::string out;
    for (int v : r.size_vars) {
      if (!out.empty()) out += ',';
      out += interval_str(v, domain_.on(v));
    }
    return out.empty() ? "true" : out;
  }
  std::string out;
  for (const auto& c : r.cases) {
    if (!out.empty()) out += " | ";
    out += c.guard.str();
  }
  return out;
}

std::vector<CostFunction> predicate_cost(const lang::Program& p, const PredKey& pred,
                                         const CostModel& model, Bound bound) {
  return Analyzer::create(p)->predicate_cost(pred, model, bound);
}

Rational eval_cost(const CostFunction& f, const std::vector<std::int64_t>& sizes) {
  return f.eval(sizes);
}

std::string export_costs(const std::vector<CostFunction>& fs) {
  std::ostringstream os;
  for (const auto& f : fs)
    os << f.pred().str() << ' ' << f.quantity().str() << ": " << f.str() << " ; "
       << f.domain() << '\n';
  return os.str();
}

}  // namespace costcal::analysis
