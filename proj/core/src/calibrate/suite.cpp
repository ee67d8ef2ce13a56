#include "costcal/calibrate/suite.hpp"

#include <random>

#include "costcal/calibrate/linalg.hpp"
#include "costcal/error.hpp"
#include "costcal/lang/parser.hpp"
#include "costcal/vm/timing.hpp"

namespace costcal::calibrate {

using lang::Term;

std::string to_string(DataKind k) {
  switch (k) {
    case DataKind::IntList: return "int_list";
    case DataKind::DeepList: return "deep_list";
    case DataKind::Nat: return "nat";
    case DataKind::Unit: return "unit";
  }
  return "?";
}

DataKind parse_data_kind(const std::string& s) {
  for (auto k : {DataKind::IntList, DataKind::DeepList, DataKind::Nat, DataKind::Unit})
    if (to_string(k) == s) return k;
  throw Error(ErrorKind::Input, "unknown data rule " + s);
}

Term gen_input(const DataRule& rule, int n, std::uint64_t seed) {
  if (n < 0) throw Error(ErrorKind::Input, "input size must be >= 0");
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(n));
  std::uniform_int_distribution<int> digit(0, 9);
  switch (rule.kind) {
    case DataKind::Nat: return Term::integer(n);
    case DataKind::Unit: return Term::atom("unit");
    case DataKind::IntList: {
      std::vector<Term> xs;
      for (int i = 0; i < n; ++i) xs.push_back(Term::integer(digit(rng)));
      return Term::list(std::move(xs));
    }
    case DataKind::DeepList: {
      std::vector<Term> xs;
      for (int i = 0; i < n; ++i)
        xs.push_back(Term::compound(
            "f", {Term::compound("g", {Term::compound("h", {Term::integer(digit(rng))})})}));
      return Term::list(std::move(xs));
    }
  }
  return Term::nil();
}

CalibrationProgram::CalibrationProgram(std::string id, std::string description,
                                       std::string source, std::string goal_template,
                                       DataRule rule)
    : id_(std::move(id)),
      description_(std::move(description)),
      source_(std::move(source)),
      analyzer_(analysis::Analyzer::create(lang::parse_program(source_))),
      goal_template_(lang::parse_term(goal_template).term),
      rule_(rule) {
  entry_ = lang::key_of(goal_template_);
  if (!program().defines(entry_))
    throw Error(ErrorKind::Input, id_ + ": goal template calls undefined " + entry_.str());
}

Term CalibrationProgram::goal(const Term& input) const {
  return vm::substitute_var(goal_template_, "In", input);
}

std::vector<std::int64_t> CalibrationProgram::sizes(const Term& g) const {
  return analysis::input_sizes(g, program().at(entry_).decl);
}

std::vector<analysis::CostFunction> CalibrationProgram::costs(
    const analysis::CostModel& model) const {
  return analyzer_->predicate_cost(entry_, model, analysis::Bound::Exact);
}

std::vector<double> CalibrationProgram::cost_row(const analysis::CostModel& model,
                                                 const Term& g) const {
  auto fs = costs(model);
  auto s = sizes(g);
  std::vector<double> row;
  for (const auto& f : fs) row.push_back(static_cast<double>(analysis::eval_cost(f, s)));
  return row;
}

void check_suite_rank(const std::vector<CalibrationProgram>& suite,
                      const analysis::CostModel& model) {
  std::vector<std::vector<double>> rows;
  for (const auto& p : suite)
    for (int n = 0; n < 25; ++n) {
      int size = std::max(n, p.rule().min_size);
      rows.push_back(p.cost_row(model, p.goal(gen_input(p.rule(), size, 1))));
    }
  if (rows.size() <= model.size())
    throw Error(ErrorKind::Numeric, "calibration suite yields too few rows");
  auto info = column_rank(Matrix::from_rows(rows));
  if (!info.dependent.empty()) {
    std::string cols;
    for (auto j : info.dependent) cols += (cols.empty() ? "" : ", ") + model[j].str();
    throw Error(ErrorKind::Numeric,
                "calibration suite is rank deficient; dependent columns: " + cols);
  }
}

namespace {

struct Entry {
  const char* id;
  const char* description;
  const char* goal;
  DataRule rule;
};

const char* source_of(const std::string& id) {
  for (const auto& s : calibration_sources())
    if (id == s.id) return s.text;
  throw Error(ErrorKind::Input, "no embedded source for " + id);
}

}  // namespace

const std::vector<CalibrationProgram>& builtin_calibration_suite() {
  static const std::vector<CalibrationProgram> suite = [] {
    const std::vector<Entry> entries = {
        {"nullary", "predicates with no arguments", "z0", {DataKind::Unit, 0}},
        {"gout", "output unification against a ground term (gounif only)", "gout(X)",
         {DataKind::Unit, 0}},
        {"trav", "list traversal, recursive call last", "trav(In)", {DataKind::IntList, 0}},
        {"travn", "list traversal, call after the recursion", "travn(In)",
         {DataKind::IntList, 0}},
        {"viunif", "input arguments passed as variables", "vi(In, 1, 2, 3, 4, 5)",
         {DataKind::IntList, 0}},
        {"vounif", "output arguments passed as variables", "vo(In, A, B, C, D)",
         {DataKind::IntList, 0}},
        {"deep", "input unification, deep head pattern (giunif deep)", "deep(In)",
         {DataKind::DeepList, 0}},
        {"flat", "input unification, flat constants (giunif flat)", "flat(In, a, b, c, d)",
         {DataKind::IntList, 0}},
        {"gol", "output list of constants (gounif)", "gol(In, R)", {DataKind::IntList, 0}},
        {"many", "predicate with twelve arguments",
         "many(In, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11)", {DataKind::IntList, 0}},
        {"env", "environment creation: several body calls", "env(In)",
         {DataKind::IntList, 0}},
    };
    std::vector<CalibrationProgram> out;
    for (const auto& e : entries)
      out.emplace_back(e.id, e.description, source_of(e.id), e.goal, e.rule);
    check_suite_rank(out, analysis::CostModel::all_head());
    return out;
  }();
  return suite;
}

}  // namespace costcal::calibrate
