#pragma once

#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "costcal/analysis/closed_form.hpp"
#include "costcal/analysis/expr.hpp"
#include "costcal/analysis/metric.hpp"
#include "costcal/lang/program.hpp"

namespace costcal::analysis {

enum class Bound { Upper, Exact };

/// Closed interval [lo, hi] of naturals; hi absent means unbounded.
struct Interval {
  Integer lo = 0;
  std::optional<Integer> hi;

  bool empty() const { return hi && *hi < lo; }
  bool contains(const Integer& x) const { return x >= lo && (!hi || x <= *hi); }
  bool unbounded() const { return lo == 0 && !hi; }
  bool disjoint(const Interval& o) const;
  void intersect(const Interval& o);
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Conjunction of intervals on size variables; absent variables are free.
struct Guard {
  std::map<int, Interval> vars;

  Interval on(int v) const;
  bool contains(const std::vector<Integer>& point) const;  // point[v-1]
  bool empty() const;
  bool trivial() const;
  std::string str() const;  // "n1>=1", "n1=0,n2>=3", "true"
  friend bool operator==(const Guard&, const Guard&) = default;
};

/// What a definition counts: the cost of one metric, or the output size of
/// one argument.
struct Quantity {
  enum class Kind { Cost, OutSize };
  Kind kind = Kind::Cost;
  Metric metric;
  int arg = 0;  // OutSize: 1-based position

  static Quantity cost(Metric m) { return {Kind::Cost, std::move(m), 0}; }
  static Quantity out_size(int arg) { return {Kind::OutSize, {}, arg}; }
  std::string str() const;
  friend auto operator<=>(const Quantity&, const Quantity&) = default;
  friend bool operator==(const Quantity&, const Quantity&) = default;
};

struct RecurrenceCase {
  int clause = -1;  // 0-based clause index, -1 for trusted/custom cases
  int group = 0;
  Guard guard;
  ExprPtr rhs;
};

/// One equation system f(n) = rhs_c(n) under guard_c. For costs, cases in one
/// group combine by max and groups combine by sum; for output sizes all
/// applicable cases combine by max.
struct Recurrence {
  lang::PredKey pred;
  Quantity quantity;
  std::vector<int> size_vars;  // 1-based argument positions with a size
  int arity = 0;
  std::vector<RecurrenceCase> cases;
  int groups = 1;
  bool trusted = false;
};

class Analyzer;

/// A cost (or size) function of one predicate's input sizes. Carries a closed
/// form when the solver found one and always the underlying recurrence.
class CostFunction {
 public:
  enum class Form { Closed, Evaluator };

  Form form() const { return closed_ ? Form::Closed : Form::Evaluator; }
  const std::optional<ClosedForm>& closed() const { return closed_; }
  const Guard& closed_domain() const { return domain_; }
  const Recurrence& recurrence() const;
  const lang::PredKey& pred() const { return recurrence().pred; }
  const Quantity& quantity() const { return recurrence().quantity; }

  /// Exact value; `sizes[i]` is the size of argument i+1 (unsized positions
  /// are ignored and may be omitted at the end).
  Rational eval(const std::vector<std::int64_t>& sizes) const;
  /// Same, always through the memoized recurrence.
  Rational eval_recurrence(const std::vector<std::int64_t>& sizes) const;

  /// Closed-form text ("n1+1") or "evaluator".
  std::string str() const;
  /// Guards under which the function is defined.
  std::string domain() const;

 private:
  friend class Analyzer;
  std::shared_ptr<Analyzer> session_;
  int def_ = -1;
  std::optional<ClosedForm> closed_;
  Guard domain_;
};

/// Sizes of one body literal's input arguments, as expressions over the
/// clause-head input sizes.
struct LiteralSizes {
  int literal = 0;  // 0-based
  lang::PredKey callee;
  std::map<int, ExprPtr> in_sizes;  // 1-based callee argument -> size
};

/// Analysis session over one program: builds cost and size recurrences on
/// demand, memoizes their numeric values and their closed forms. Not meant to
/// be shared by concurrent workers; calls are serialized internally.
class Analyzer : public std::enable_shared_from_this<Analyzer> {
 public:
  static std::shared_ptr<Analyzer> create(lang::Program program);

  const lang::Program& program() const { return program_; }

  /// Id of the definition for (pred, q), building it if needed.
  int def(const lang::PredKey& pred, const Quantity& q);
  /// Registers a hand-written recurrence; Call nodes may refer to
  /// `next_id()` for self-reference.
  int define(Recurrence r);
  int next_id() const { return static_cast<int>(defs_.size()); }
  /// The recurrence behind `id` (built on first access).
  const Recurrence& recurrence(int id);
  std::string def_name(int id) const;

  /// Exact value at a point (point[v-1] = size of argument v).
  Rational evaluate(int id, const std::vector<Integer>& point);
  /// Closed form when the recurrence is in the solvable class.
  std::optional<ClosedForm> closed_form(int id);
  CostFunction function(int id);

  std::vector<CostFunction> predicate_cost(const lang::PredKey& pred,
                                           const CostModel& model, Bound bound);
  /// Per clause, the input sizes of every user-call literal.
  std::vector<std::vector<LiteralSizes>> size_relations(const lang::PredKey& pred);

  std::string render(const ExprPtr& e) const;

 private:
  explicit Analyzer(lang::Program p) : program_(std::move(p)) {}

  struct PredInfo;
  struct Def {
    Recurrence rec;
    bool built = false;
    std::map<std::vector<Integer>, Rational> memo;
    enum class Solve { No, Running, Done } solve = Solve::No;
    std::optional<ClosedForm> closed;
    Guard domain;
  };

  const PredInfo& pred_info(const lang::PredKey& pred);
  void ensure_built(int id);
  Rational eval_locked(int id, const std::vector<Integer>& point);
  std::optional<ClosedForm> solve_locked(int id);
  std::optional<ClosedForm> solve_shape(int id, Guard& domain);
  bool self_check(int id, const ClosedForm& f, const Guard& dom);
  void check_exact(const lang::PredKey& pred);

  lang::Program program_;
  std::deque<Def> defs_;
  std::map<std::pair<lang::PredKey, Quantity>, int> index_;
  std::map<lang::PredKey, std::shared_ptr<PredInfo>> infos_;
  std::map<std::pair<int, std::vector<Integer>>, bool> in_progress_;
  std::recursive_mutex mu_;
};

/// Static head-unification counts for one clause.
EventMap head_metrics(const lang::Clause& c, const lang::PredicateDecl& decl);

/// Number of occurrences of operator `op`/`arity` in arithmetic term `a`.
std::int64_t ev_cost(const std::string& op, int arity, const lang::Term& a);

/// Builtin and arithmetic-operator events of one execution of the body.
EventMap body_metrics(const lang::Clause& c, const lang::Program& p);

/// Input sizes measured on a concrete call (sizes[i] for argument i+1; 0 for
/// unsized positions). Throws Input when an in-argument cannot be measured.
std::vector<std::int64_t> input_sizes(const lang::Term& goal,
                                      const lang::PredicateDecl& decl);

/// Convenience wrappers over a fresh session.
std::vector<CostFunction> predicate_cost(const lang::Program& p,
                                         const lang::PredKey& pred,
                                         const CostModel& model, Bound bound);
Rational eval_cost(const CostFunction& f, const std::vector<std::int64_t>& sizes);

/// One text record per function: "app/3 step: n1+1 ; n1>=0".
std::string export_costs(const std::vector<CostFunction>& fs);

}  // namespace costcal::analysis
