#include "costcal/lang/program.hpp"

#include <set>

#include "costcal/error.hpp"
#include "costcal/lang/operators.hpp"

namespace costcal::lang {

std::optional<OpDef> infix_op(std::string_view n) {
  if (n == ":-") return OpDef{1200, OpType::xfx};
  if (n == ",") return OpDef{1000, OpType::xfy};
  if (n == "is" || n == "=:=" || n == "=\\=" || n == "<" || n == ">" ||
      n == "=<" || n == ">=")
    return OpDef{700, OpType::xfx};
  if (n == "+" || n == "-") return OpDef{500, OpType::yfx};
  if (n == "*" || n == "/" || n == "//" || n == "mod" || n == "rem")
    return OpDef{400, OpType::yfx};
  if (n == "^" || n == "**") return OpDef{200, OpType::xfy};
  return std::nullopt;
}

std::optional<OpDef> prefix_op(std::string_view n) {
  if (n == ":-") return OpDef{1200, OpType::fx};
  if (n == "-") return OpDef{200, OpType::fy};
  return std::nullopt;
}

std::string to_string(Mode m) { return m == Mode::In ? "in" : "out"; }

std::string to_string(Measure m) {
  switch (m) {
    case Measure::ListLength: return "length";
    case Measure::TermSize: return "size";
    case Measure::TermDepth: return "depth";
    case Measure::IntValue: return "int";
    case Measure::None: return "void";
  }
  return "void";
}

bool is_comparison(const PredKey& k) {
  if (k.arity != 2) return false;
  return k.name == "=:=" || k.name == "=\\=" || k.name == "<" ||
         k.name == ">" || k.name == "=<" || k.name == ">=";
}

bool is_arith_op(const PredKey& k) {
  if (k.arity == 2)
    return k.name == "+" || k.name == "-" || k.name == "*" || k.name == "/" ||
           k.name == "//" || k.name == "mod" || k.name == "rem" ||
           k.name == "^" || k.name == "**" || k.name == "min" ||
           k.name == "max";
  if (k.arity == 1) return k.name == "-" || k.name == "abs";
  return false;
}

bool is_builtin(const PredKey& k) {
  return is_comparison(k) || (k.name == "is" && k.arity == 2) ||
         (k.name == "true" && k.arity == 0);
}

LiteralKind classify(const Term& goal) {
  PredKey k = key_of(goal);
  if (k.name == "is" && k.arity == 2) return LiteralKind::Arith;
  if (is_builtin(k)) return LiteralKind::Builtin;
  return LiteralKind::Call;
}

const Predicate* Program::find(const PredKey& k) const {
  auto it = preds_.find(k);
  return it == preds_.end() ? nullptr : &it->second;
}

const Predicate& Program::at(const PredKey& k) const {
  if (const auto* p = find(k)) return *p;
  throw Error(ErrorKind::Input, "unknown predicate " + k.str());
}

bool Program::defines(const PredKey& k) const {
  const auto* p = find(k);
  return p && (!p->clauses.empty() || p->decl.trusted());
}

Predicate& Program::upsert(const PredKey& k) {
  auto [it, inserted] = preds_.try_emplace(k);
  if (inserted) it->second.decl.key = k;
  return it->second;
}

std::vector<PredKey> Program::roots() const {
  if (!entries_.empty()) return entries_;
  std::vector<PredKey> out;
  for (const auto& [k, p] : preds_) out.push_back(k);
  return out;
}

std::vector<PredKey> Program::reachable() const {
  std::set<PredKey> seen;
  std::vector<PredKey> stack = roots(), out;
  while (!stack.empty()) {
    PredKey k = stack.back();
    stack.pop_back();
    if (!seen.insert(k).second) continue;
    out.push_back(k);
    const auto* p = find(k);
    if (!p) continue;
    for (const auto& c : p->clauses)
      for (const auto& l : c.body)
        if (l.kind == LiteralKind::Call) stack.push_back(l.key());
  }
  return out;
}

}  // namespace costcal::lang
