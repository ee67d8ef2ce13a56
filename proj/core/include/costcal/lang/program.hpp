#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "costcal/lang/term.hpp"

namespace costcal::lang {

enum class Mode { In, Out };

/// Size measure applied to an argument; `None` means the argument does not
/// contribute a size variable.
enum class Measure { ListLength, TermSize, TermDepth, IntValue, None };

std::string to_string(Mode m);
std::string to_string(Measure m);

enum class LiteralKind { Call, Builtin, Arith };

/// One body goal. `Arith` is reserved for `is/2`; comparisons and `true/0`
/// are `Builtin`.
struct Literal {
  LiteralKind kind = LiteralKind::Call;
  Term goal;
  int line = 0;

  PredKey key() const { return key_of(goal); }
};

struct Clause {
  Term head;
  std::vector<Literal> body;
  int line = 0;

  PredKey key() const { return key_of(head); }
};

/// Size assertion for one input argument of one body literal, used when the
/// size cannot be derived structurally. Indices are 1-based.
struct SizeHint {
  int clause = 0;
  int literal = 0;
  int arg = 0;
  Term expr;  // arithmetic over n1..nk (the clause-head sizes)
};

struct PredicateDecl {
  PredKey key;
  std::vector<Mode> modes;
  std::vector<Measure> measures;
  std::optional<Term> sols;  // over n1..nk; absent means constant 1
  std::optional<std::vector<std::vector<int>>> mutex_groups;  // 0-based
  std::map<std::string, Term> trust_cost;  // metric name -> expression
  std::map<int, Term> out_size;            // 1-based arg -> expression
  std::vector<SizeHint> size_hints;
  bool modes_declared = false;
  bool measures_declared = false;

  // A 0-ary predicate needs no declarations.
  bool has_modes() const { return modes_declared || key.arity == 0; }
  bool has_measures() const { return measures_declared || key.arity == 0; }
  bool trusted() const { return !trust_cost.empty(); }
};

struct Predicate {
  PredicateDecl decl;
  std::vector<Clause> clauses;
};

/// A parsed program. Immutable after `parse_program` returns; safe to share
/// between threads.
class Program {
 public:
  const std::map<PredKey, Predicate>& predicates() const { return preds_; }
  const std::vector<PredKey>& entry_points() const { return entries_; }

  const Predicate* find(const PredKey& k) const;
  const Predicate& at(const PredKey& k) const;
  bool defines(const PredKey& k) const;

  /// Entry points, or every predicate when none were declared.
  std::vector<PredKey> roots() const;
  /// Predicates reachable from `roots()` through user calls.
  std::vector<PredKey> reachable() const;

  // Construction interface used by the parser.
  Predicate& upsert(const PredKey& k);
  void add_entry(PredKey k) { entries_.push_back(std::move(k)); }

 private:
  std::map<PredKey, Predicate> preds_;
  std::vector<PredKey> entries_;
};

bool is_builtin(const PredKey& k);
bool is_comparison(const PredKey& k);
bool is_arith_op(const PredKey& k);
LiteralKind classify(const Term& goal);

}  // namespace costcal::lang
