#include "costcal/analysis/expr.hpp"

#include <algorithm>

#include "costcal/error.hpp"

namespace costcal::analysis {
namespace {

ExprPtr make(ExprKind k, std::vector<ExprPtr> args) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->args = std::move(args);
  return e;
}

Integer natural(const Rational& r, const char* what) {
  if (!is_integer(r) || r < 0)
    throw Error(ErrorKind::Domain, std::string(what) + " is not a natural number: " +
                                       costcal::to_string(r));
  return to_integer(r);
}

}  // namespace

ExprPtr Expr::constant(const Rational& c) {
  auto e = std::make_shared<Expr>();
  e->value = c;
  return e;
}

ExprPtr Expr::variable(int v) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Var;
  e->var = v;
  return e;
}

ExprPtr Expr::unknown(std::string why) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Unknown;
  e->note = std::move(why);
  return e;
}

ExprPtr Expr::call(int def, std::vector<ExprPtr> args) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Call;
  e->def = def;
  e->args = std::move(args);
  return e;
}

ExprPtr Expr::add(ExprPtr a, ExprPtr b) {
  if (a->is_zero()) return b;
  if (b->is_zero()) return a;
  if (a->is_const() && b->is_const()) return constant(a->value + b->value);
  return make(ExprKind::Add, {std::move(a), std::move(b)});
}

ExprPtr Expr::sub(ExprPtr a, ExprPtr b) {
  if (b->is_zero()) return a;
  if (a->is_const() && b->is_const()) return constant(a->value - b->value);
  return make(ExprKind::Sub, {std::move(a), std::move(b)});
}

ExprPtr Expr::mul(ExprPtr a, ExprPtr b) {
  if (a->is_zero() || b->is_zero()) return constant(0);
  if (a->is_one()) return b;
  if (b->is_one()) return a;
  if (a->is_const() && b->is_const()) return constant(a->value * b->value);
  return make(ExprKind::Mul, {std::move(a), std::move(b)});
}

ExprPtr Expr::max(ExprPtr a, ExprPtr b) {
  if (a->is_const() && b->is_const())
    return constant(std::max(a->value, b->value));
  return make(ExprKind::Max, {std::move(a), std::move(b)});
}

ExprPtr Expr::pow(ExprPtr a, ExprPtr b) {
  if (b->is_zero()) return constant(1);
  if (b->is_one()) return a;
  return make(ExprKind::Pow, {std::move(a), std::move(b)});
}

bool has_unknown(const ExprPtr& e) {
  if (!e) return false;
  if (e->kind == ExprKind::Unknown) return true;
  return std::any_of(e->args.begin(), e->args.end(),
                     [](const ExprPtr& a) { return has_unknown(a); });
}

std::string unknown_note(const ExprPtr& e) {
  if (!e) return {};
  if (e->kind == ExprKind::Unknown) return e->note;
  for (const auto& a : e->args)
    if (auto n = unknown_note(a); !n.empty()) return n;
  return {};
}

ExprPtr substitute(const ExprPtr& e, const std::map<int, ExprPtr>& subst) {
  if (!e) return e;
  switch (e->kind) {
    case ExprKind::Const:
    case ExprKind::Unknown:
      return e;
    case ExprKind::Var: {
      auto it = subst.find(e->var);
      return it == subst.end() ? e : it->second;
    }
    case ExprKind::Call: {
      std::vector<ExprPtr> args;
      for (const auto& a : e->args) args.push_back(substitute(a, subst));
      return Expr::call(e->def, std::move(args));
    }
    default: break;
  }
  auto a = substitute(e->args[0], subst);
  auto b = substitute(e->args[1], subst);
  switch (e->kind) {
    case ExprKind::Add: return Expr::add(a, b);
    case ExprKind::Sub: return Expr::sub(a, b);
    case ExprKind::Mul: return Expr::mul(a, b);
    case ExprKind::Max: return Expr::max(a, b);
    default: return Expr::pow(a, b);
  }
}

ExprPtr expr_from_term(const lang::Term& t) {
  auto bad = [&]() -> ExprPtr {
    throw Error(ErrorKind::Input, "bad size/cost expression " + lang::to_string(t));
  };
  if (t.is_int()) return Expr::constant(t.as_int());
  if (t.is_atom()) {
    const auto& n = t.as_atom().name;
    if (n.size() >= 2 && n[0] == 'n' &&
        std::all_of(n.begin() + 1, n.end(), [](char c) { return c >= '0' && c <= '9'; }))
      return Expr::variable(std::stoi(n.substr(1)));
    return bad();
  }
  if (!t.is_compound()) return bad();
  auto f = t.functor();
  if (t.arity() == 1 && f == "-")
    return Expr::sub(Expr::constant(0), expr_from_term(t.arg(0)));
  if (t.arity() != 2) return bad();
  auto a = expr_from_term(t.arg(0));
  auto b = expr_from_term(t.arg(1));
  if (f == "+") return Expr::add(a, b);
  if (f == "-") return Expr::sub(a, b);
  if (f == "*") return Expr::mul(a, b);
  if (f == "^" || f == "**") return Expr::pow(a, b);
  if (f == "max") return Expr::max(a, b);
  if (f == "min")  // min(a,b) = a + b - max(a,b)
    return Expr::sub(Expr::add(a, b), Expr::max(a, b));
  if (f == "/") {
    if (!b->is_const() || b->value == 0) return bad();
    return Expr::mul(a, Expr::constant(Rational(1) / b->value));
  }
  return bad();
}

Rational eval_expr(
    const ExprPtr& e, const std::function<Integer(int)>& var,
    const std::function<Rational(int, const std::vector<Integer>&)>& call) {
  switch (e->kind) {
    case ExprKind::Const: return e->value;
    case ExprKind::Var: return Rational(var(e->var));
    case ExprKind::Unknown:
      throw Error(ErrorKind::Analysis, "cannot evaluate unknown size: " + e->note);
    case ExprKind::Call: {
      std::vector<Integer> args;
      for (const auto& a : e->args)
        args.push_back(a ? natural(eval_expr(a, var, call), "size argument")
                         : Integer(0));
      return call(e->def, args);
    }
    default: break;
  }
  Rational a = eval_expr(e->args[0], var, call);
  Rational b = eval_expr(e->args[1], var, call);
  switch (e->kind) {
    case ExprKind::Add: return a + b;
    case ExprKind::Sub: return a - b;
    case ExprKind::Mul: return a * b;
    case ExprKind::Max: return std::max(a, b);
    default: {
      Integer n = natural(b, "exponent");
      if (n > 100000) throw Error(ErrorKind::Domain, "exponent too large");
      return rpow(a, n.convert_to<long long>());
    }
  }
}

std::optional<ClosedForm> to_closed(
    const ExprPtr& e,
    const std::function<std::optional<ClosedForm>(int)>& callee) {
  switch (e->kind) {
    case ExprKind::Const: return ClosedForm::constant(e->value);
    case ExprKind::Var: return ClosedForm::var(e->var);
    case ExprKind::Unknown:
    case ExprKind::Max: return std::nullopt;
    case ExprKind::Call: {
      auto f = callee(e->def);
      if (!f) return std::nullopt;
      std::map<int, ClosedForm> args;
      for (std::size_t i = 0; i < e->args.size(); ++i) {
        if (!e->args[i]) continue;
        auto a = to_closed(e->args[i], callee);
        if (!a) return std::nullopt;
        args.emplace(static_cast<int>(i) + 1, *a);
      }
      for (int v : f->vars())
        if (!args.count(v)) return std::nullopt;
      return f->substitute(args);
    }
    default: break;
  }
  auto a = to_closed(e->args[0], callee);
  auto b = to_closed(e->args[1], callee);
  if (!a || !b) return std::nullopt;
  switch (e->kind) {
    case ExprKind::Add: return *a + *b;
    case ExprKind::Sub: return *a - *b;
    case ExprKind::Mul: return *a * *b;
    default: {
      if (b->is_constant()) {
        Rational k = b->constant_value();
        if (!is_integer(k) || k < 0 || k > 64) return std::nullopt;
        return a->pow(to_integer(k).convert_to<unsigned>());
      }
      if (!a->is_constant()) return std::nullopt;
      Rational base = a->constant_value();
      if (!is_integer(base) || base < 1) return std::nullopt;
      // base^(s*n+t) as an exponential in n.
      ClosedForm x = ClosedForm::exp(1, to_integer(base).convert_to<std::uint64_t>());
      return x.substitute({{1, *b}});
    }
  }
}

std::string print_expr(const ExprPtr& e,
                      const std::function<std::string(int)>& name) {
  if (!e) return "_";
  auto paren = [&](const ExprPtr& x) {
    std::string s = print_expr(x, name);
    bool simple = x->kind == ExprKind::Const || x->kind == ExprKind::Var ||
                  x->kind == ExprKind::Call || x->kind == ExprKind::Max;
    return simple && !(x->is_const() && x->value < 0) ? s : "(" + s + ")";
  };
  switch (e->kind) {
    case ExprKind::Const: return to_string(e->value);
    case ExprKind::Var: return "n" + std::to_string(e->var);
    case ExprKind::Unknown: return "?";
    case ExprKind::Call: {
      std::string out = name(e->def) + "(";
      bool first = true;
      for (const auto& a : e->args) {
        if (!a) continue;
        if (!first) out += ',';
        first = false;
        out += print_expr(a, name);
      }
      return out + ")";
    }
    case ExprKind::Add:
      return print_expr(e->args[0], name) + "+" + print_expr(e->args[1], name);
    case ExprKind::Sub:
      return print_expr(e->args[0], name) + "-" + paren(e->args[1]);
    case ExprKind::Mul: return paren(e->args[0]) + "*" + paren(e->args[1]);
    case ExprKind::Pow: return paren(e->args[0]) + "^" + paren(e->args[1]);
    case ExprKind::Max:
      return "max(" + print_expr(e->args[0], name) + "," +
             print_expr(e->args[1], name) + ")";
  }
  return "?";
}

}  // namespace costcal::analysis
