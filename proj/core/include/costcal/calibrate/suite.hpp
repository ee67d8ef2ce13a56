#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "costcal/analysis/analyzer.hpp"
#include "costcal/lang/program.hpp"

namespace costcal::calibrate {

/// How inputs of a given size are generated.
enum class DataKind {
  IntList,   // list of n integers in [0, 9]
  DeepList,  // list of n terms f(g(h(k)))
  Nat,       // the integer n
  Unit       // the atom `unit`; size-independent programs
};

struct DataRule {
  DataKind kind = DataKind::IntList;
  int min_size = 0;  // smallest size the program accepts
};

std::string to_string(DataKind k);
DataKind parse_data_kind(const std::string& s);

/// Deterministic in (rule, n, seed). Measures to n under the rule's measure
/// (list length, or integer value); Unit ignores n.
lang::Term gen_input(const DataRule& rule, int n, std::uint64_t seed);

/// A program with a data-generation rule and exact cost functions.
class CalibrationProgram {
 public:
  CalibrationProgram(std::string id, std::string description, std::string source,
                     std::string goal_template, DataRule rule);

  const std::string& id() const { return id_; }
  const std::string& description() const { return description_; }
  const std::string& source() const { return source_; }
  const lang::Program& program() const { return analyzer_->program(); }
  const lang::PredKey& entry() const { return entry_; }
  const lang::Term& goal_template() const { return goal_template_; }
  const DataRule& rule() const { return rule_; }

  /// Goal with the template variable `In` replaced by `input`.
  lang::Term goal(const lang::Term& input) const;
  /// Size vector of a goal (sizes[i] for argument i+1).
  std::vector<std::int64_t> sizes(const lang::Term& goal) const;
  /// Exact cost functions for `model`, one per component. Throws Analysis
  /// when the costs are only upper bounds.
  std::vector<analysis::CostFunction> costs(const analysis::CostModel& model) const;
  /// Row of event counts for `model` at a goal.
  std::vector<double> cost_row(const analysis::CostModel& model,
                               const lang::Term& goal) const;

 private:
  std::string id_, description_, source_;
  std::shared_ptr<analysis::Analyzer> analyzer_;
  lang::PredKey entry_;
  lang::Term goal_template_;
  DataRule rule_;
};

/// Embedded source of a calibration program, by id.
struct ProgramSource {
  const char* id;
  const char* text;
};
const std::vector<ProgramSource>& calibration_sources();

/// The calibration programs. Construction checks that the stacked cost
/// matrix for the six head metrics over sizes 0..24 has full column rank and
/// throws a Numeric error naming the dependent columns otherwise.
const std::vector<CalibrationProgram>& builtin_calibration_suite();

/// Rank check used by the suite, exposed for custom suites.
void check_suite_rank(const std::vector<CalibrationProgram>& suite,
                      const analysis::CostModel& model);

}  // namespace costcal::calibrate
