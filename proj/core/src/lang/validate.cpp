#include "costcal/lang/validate.hpp"

#include <algorithm>
#include <set>

#include "costcal/lang/parser.hpp"

namespace costcal::lang {
namespace {

void error(std::vector<Diagnostic>& out, std::string msg) {
  out.push_back({Severity::Error, std::move(msg)});
}

void warn(std::vector<Diagnostic>& out, std::string msg) {
  out.push_back({Severity::Warning, std::move(msg)});
}

bool pred_indicator(const Term& t) {
  return t.is_compound() && t.as_compound().functor == "/" && t.arity() == 2 &&
         t.arg(0).is_atom() && t.arg(1).is_int() && t.arg(1).as_int() >= 0;
}

void check_negative_int_heads(const Predicate& pred,
                              std::vector<Diagnostic>& out) {
  const auto& d = pred.decl;
  if (d.measures.size() != static_cast<std::size_t>(d.key.arity)) return;
  for (std::size_t ci = 0; ci < pred.clauses.size(); ++ci) {
    const Term& h = pred.clauses[ci].head;
    for (int a = 0; a < d.key.arity; ++a) {
      if (d.measures[a] != Measure::IntValue) continue;
      const Term& arg = h.arg(a);
      if ((arg.is_int() && arg.as_int() < 0) ||
          (arg.is_float() && arg.as_float() < 0))
        error(out, d.key.str() + " clause " + std::to_string(ci + 1) +
                       ": int-value measure of negative constant " +
                       to_string(arg) + " in argument " +
                       std::to_string(a + 1));
    }
  }
}

}  // namespace

bool is_metric_name(const Term& t) {
  if (t.is_atom()) {
    const auto& n = t.as_atom().name;
    return n == "step" || n == "nargs" || n == "giunif" || n == "gounif" ||
           n == "viunif" || n == "vounif";
  }
  if (t.is_compound() && t.arity() == 1 &&
      (t.as_compound().functor == "builtin" ||
       t.as_compound().functor == "arith"))
    return pred_indicator(t.arg(0));
  return false;
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(), [](const Diagnostic& d) {
    return d.severity == Severity::Error;
  });
}

std::vector<Diagnostic> validate_program(const Program& p) {
  std::vector<Diagnostic> out;

  for (const auto& e : p.entry_points())
    if (!p.defines(e)) error(out, "entry point " + e.str() + " is not defined");

  for (const auto& [k, pred] : p.predicates()) {
    const auto& d = pred.decl;
    if (d.has_modes() && d.modes.size() != static_cast<std::size_t>(k.arity))
      error(out, "arity mismatch: " + k.str() + " declares " +
                     std::to_string(d.modes.size()) + " modes");
    if (d.has_measures() &&
        d.measures.size() != static_cast<std::size_t>(k.arity))
      error(out, "arity mismatch: " + k.str() + " declares " +
                     std::to_string(d.measures.size()) + " measures");
    if (pred.clauses.empty() && !d.trusted())
      warn(out, k.str() + " is declared but has no clauses or trust_cost");

    if (d.mutex_groups) {
      std::vector<int> seen(pred.clauses.size(), 0);
      bool bad_index = false;
      for (const auto& g : *d.mutex_groups)
        for (int i : g) {
          if (i < 0 || static_cast<std::size_t>(i) >= pred.clauses.size())
            bad_index = true;
          else
            ++seen[i];
        }
      if (bad_index ||
          std::any_of(seen.begin(), seen.end(), [](int n) { return n != 1; }))
        error(out, "mutex groups of " + k.str() +
                       " do not partition its clauses");
    }

    for (const auto& [metric, expr] : d.trust_cost) {
      if (!is_metric_name(parse_term(metric).term))
        error(out, "trust_cost for " + k.str() + " names unknown metric " +
                       metric);
    }

    for (const auto& [arg, expr] : d.out_size) {
      if (arg < 1 || arg > k.arity ||
          (d.has_modes() && static_cast<std::size_t>(arg) <= d.modes.size() &&
           d.modes[arg - 1] != Mode::Out))
        error(out, "size assertion for " + k.str() + " names argument " +
                       std::to_string(arg) + ", which is not an output");
    }

    check_negative_int_heads(pred, out);

    for (std::size_t ci = 0; ci < pred.clauses.size(); ++ci) {
      for (const auto& lit : pred.clauses[ci].body) {
        if (lit.kind != LiteralKind::Call) continue;
        if (!p.defines(lit.key()))
          error(out, k.str() + " clause " + std::to_string(ci + 1) +
                         ": call to undefined predicate " + lit.key().str() +
                         " (no clauses and no trust_cost)");
      }
    }
  }

  for (const auto& k : p.reachable()) {
    const auto* pred = p.find(k);
    if (!pred) continue;
    if (!pred->decl.has_modes())
      error(out, k.str() + " is reachable but has no mode declaration");
    if (!pred->decl.has_measures())
      error(out, k.str() + " is reachable but has no measure declaration");
  }
  return out;
}

}  // namespace costcal::lang
