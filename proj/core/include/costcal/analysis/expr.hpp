#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "costcal/analysis/closed_form.hpp"
#include "costcal/analysis/rational.hpp"
#include "costcal/lang/term.hpp"

namespace costcal::analysis {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class ExprKind { Const, Var, Add, Sub, Mul, Max, Pow, Call, Unknown };

/// Symbolic size/cost expression over the size variables n1..nk of one
/// predicate (k = argument position). `Call` applies another cost or size
/// definition, by id, to argument expressions indexed by the callee's
/// argument positions (null entries for unsized positions).
struct Expr {
  ExprKind kind = ExprKind::Const;
  Rational value;               // Const
  int var = 0;                  // Var
  int def = -1;                 // Call
  std::vector<ExprPtr> args;    // operands, or callee arguments for Call
  std::string note;             // Unknown: reason

  static ExprPtr constant(const Rational& c);
  static ExprPtr variable(int v);
  static ExprPtr unknown(std::string why);
  static ExprPtr call(int def, std::vector<ExprPtr> args);
  static ExprPtr add(ExprPtr a, ExprPtr b);
  static ExprPtr sub(ExprPtr a, ExprPtr b);
  static ExprPtr mul(ExprPtr a, ExprPtr b);
  static ExprPtr max(ExprPtr a, ExprPtr b);
  static ExprPtr pow(ExprPtr a, ExprPtr b);

  bool is_const() const { return kind == ExprKind::Const; }
  bool is_zero() const { return is_const() && value == 0; }
  bool is_one() const { return is_const() && value == 1; }
};

/// True when `e` contains an Unknown leaf.
bool has_unknown(const ExprPtr& e);
/// First Unknown note inside `e` (empty if none).
std::string unknown_note(const ExprPtr& e);

/// Replaces Var(v) by subst.at(v); vars absent from the map are kept.
ExprPtr substitute(const ExprPtr& e, const std::map<int, ExprPtr>& subst);

/// Reads an arithmetic term over atoms n1, n2, ... (+ - * / ^ ** max min and
/// integers). Division is only allowed by a constant.
ExprPtr expr_from_term(const lang::Term& t);

/// Numeric value. `call(def, argument values)` evaluates Call nodes; the
/// argument vector is indexed like the callee's arguments (missing = 0).
Rational eval_expr(const ExprPtr& e, const std::function<Integer(int)>& var,
                   const std::function<Rational(int, const std::vector<Integer>&)>& call);

/// Closed form of `e`, given closed forms for the definitions it calls.
/// Fails on Max, Unknown, non-affine exponents, and calls without one.
std::optional<ClosedForm> to_closed(
    const ExprPtr& e,
    const std::function<std::optional<ClosedForm>(int)>& callee);

/// Rendering with `name(def)` for calls, e.g. "1+cost(app/3,step)(n1-1,n2)".
std::string print_expr(const ExprPtr& e,
                       const std::function<std::string(int)>& name);

}  // namespace costcal::analysis
