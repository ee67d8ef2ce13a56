#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "costcal/lang/program.hpp"

namespace costcal::lang {

/// Parses a program in the documented clause syntax (see docs/grammar.md).
/// Throws ParseError with line/column on malformed text, and Error(Input)
/// on duplicate declarations or declarations naming an arity that only
/// exists for a different predicate of the same name.
Program parse_program(std::string_view source);

struct ParsedTerm {
  Term term;
  std::map<std::string, Term> vars;  // named variables, by name
};

/// Parses a single term (a trailing '.' is optional). Variable ids start at
/// `first_var_id` so terms can be kept apart from a program's variables.
ParsedTerm parse_term(std::string_view text,
                      std::uint64_t first_var_id = (1ull << 48));

/// Renders a program back to source text that reparses to an
/// alpha-equivalent program.
std::string print_program(const Program& p);

}  // namespace costcal::lang
