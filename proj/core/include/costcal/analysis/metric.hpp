#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "costcal/lang/term.hpp"

namespace costcal::analysis {

enum class MetricKind { Step, Nargs, Giunif, Gounif, Viunif, Vounif, Builtin, ArithOp };

/// One low-level event kind. Builtin and arithmetic-operator metrics carry the
/// name/arity they count; two metrics are equal iff tag and identifier match.
struct Metric {
  MetricKind kind = MetricKind::Step;
  std::string name;  // Builtin / ArithOp only
  int arity = 0;

  static Metric step() { return {MetricKind::Step, {}, 0}; }
  static Metric nargs() { return {MetricKind::Nargs, {}, 0}; }
  static Metric giunif() { return {MetricKind::Giunif, {}, 0}; }
  static Metric gounif() { return {MetricKind::Gounif, {}, 0}; }
  static Metric viunif() { return {MetricKind::Viunif, {}, 0}; }
  static Metric vounif() { return {MetricKind::Vounif, {}, 0}; }
  static Metric builtin(std::string name, int arity) {
    return {MetricKind::Builtin, std::move(name), arity};
  }
  static Metric arith(std::string op, int arity) {
    return {MetricKind::ArithOp, std::move(op), arity};
  }

  bool is_head_metric() const {
    return kind != MetricKind::Builtin && kind != MetricKind::ArithOp;
  }

  /// "step", "builtin(is/2)", "arith(+/2)".
  std::string str() const;
  /// Inverse of str(); also accepts the bare head-metric names.
  static Metric parse(std::string_view text);
  static Metric from_term(const lang::Term& t);

  friend auto operator<=>(const Metric&, const Metric&) = default;
  friend bool operator==(const Metric&, const Metric&) = default;
};

/// Per-event tallies, used both for static clause counts and dynamic counts.
using EventMap = std::map<Metric, std::int64_t>;

/// Ordered, duplicate-free vector of metrics: one cost model.
class CostModel {
 public:
  CostModel() = default;
  explicit CostModel(std::vector<Metric> components);

  const std::vector<Metric>& components() const { return components_; }
  std::size_t size() const { return components_.size(); }
  const Metric& operator[](std::size_t i) const { return components_[i]; }
  int index_of(const Metric& m) const;
  bool contains(const Metric& m) const { return index_of(m) >= 0; }

  /// Comma-separated component names, e.g. "step,giunif,gounif".
  std::string signature() const;
  /// Parses a signature; separators may be commas or spaces. "all" expands to
  /// the six head metrics.
  static CostModel parse(std::string_view sig);

  static CostModel all_head();          // step nargs giunif gounif viunif vounif
  static CostModel no_nargs();          // step giunif gounif viunif vounif
  static CostModel no_nargs_viunif();   // step giunif gounif vounif
  static CostModel step_only();
  /// The four models compared in the evaluation tables.
  static std::vector<CostModel> standard_models();

  friend bool operator==(const CostModel&, const CostModel&) = default;

 private:
  std::vector<Metric> components_;
};

}  // namespace costcal::analysis
