#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace costcal::lang {

/// A logic variable. `id` is unique across a whole Program: the parser
/// standardizes variables apart per clause, so two clauses never share one.
struct Var {
  std::string name;
  std::uint64_t id = 0;
};

struct Atom {
  std::string name;
};

class Term;

struct Compound {
  std::string functor;
  std::vector<Term> args;  // never empty; a 0-ary functor is an Atom
};

class Term {
 public:
  using Node = std::variant<Var, Atom, std::int64_t, double, Compound>;

  Term() : node_(Atom{"[]"}) {}
  explicit Term(Node node) : node_(std::move(node)) {}

  static Term var(std::string name, std::uint64_t id) {
    return Term(Var{std::move(name), id});
  }
  static Term atom(std::string name) { return Term(Atom{std::move(name)}); }
  static Term integer(std::int64_t v) { return Term(Node(v)); }
  static Term real(double v) { return Term(Node(v)); }
  /// Builds `functor(args...)`, collapsing to an atom when `args` is empty.
  static Term compound(std::string functor, std::vector<Term> args);
  static Term nil() { return atom("[]"); }
  static Term cons(Term head, Term tail);
  static Term list(std::vector<Term> elems, Term tail = nil());

  const Node& node() const { return node_; }

  bool is_var() const { return std::holds_alternative<Var>(node_); }
  bool is_atom() const { return std::holds_alternative<Atom>(node_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(node_); }
  bool is_float() const { return std::holds_alternative<double>(node_); }
  bool is_number() const { return is_int() || is_float(); }
  bool is_compound() const { return std::holds_alternative<Compound>(node_); }
  bool is_constant() const { return is_atom() || is_number(); }
  bool is_nil() const { return is_atom() && as_atom().name == "[]"; }
  bool is_cons() const;

  const Var& as_var() const { return std::get<Var>(node_); }
  const Atom& as_atom() const { return std::get<Atom>(node_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(node_); }
  double as_float() const { return std::get<double>(node_); }
  const Compound& as_compound() const { return std::get<Compound>(node_); }

  /// Functor name for atoms and compounds, empty otherwise.
  std::string_view functor() const;
  int arity() const;
  const Term& arg(std::size_t i) const { return as_compound().args.at(i); }

  /// Structural equality; variables compare by id.
  friend bool operator==(const Term& a, const Term& b);
  friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }

 private:
  Node node_;
};

/// Equality modulo a consistent renaming of variables (alpha-equivalence).
bool alpha_equivalent(const Term& a, const Term& b);

/// Number of function symbols, constants and variables in `t`.
std::size_t symbol_count(const Term& t);

void for_each_var(const Term& t, const std::function<void(const Var&)>& fn);

/// Canonical Prolog-syntax rendering (operators, lists, quoted atoms).
std::string to_string(const Term& t);

struct PredKey {
  std::string name;
  int arity = 0;

  std::string str() const { return name + "/" + std::to_string(arity); }
  friend auto operator<=>(const PredKey&, const PredKey&) = default;
  friend bool operator==(const PredKey&, const PredKey&) = default;
};

inline PredKey key_of(const Term& t) {
  return PredKey{std::string(t.functor()), t.arity()};
}

}  // namespace costcal::lang
