#pragma once

#include <string>
#include <vector>

#include "costcal/lang/program.hpp"

namespace costcal::lang {

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string message;
};

/// Checks declarations and call-graph closure. Returns an empty list iff every
/// invariant holds and every predicate reachable from the entry points has
/// modes and measures.
std::vector<Diagnostic> validate_program(const Program& p);

bool has_errors(const std::vector<Diagnostic>& diags);

/// True for metric names accepted by `trust_cost`: the six head metrics,
/// `builtin(Name/Arity)` and `arith(Op/Arity)`.
bool is_metric_name(const Term& t);

}  // namespace costcal::lang
