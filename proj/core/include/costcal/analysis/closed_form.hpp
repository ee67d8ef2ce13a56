#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "costcal/analysis/rational.hpp"

namespace costcal::analysis {

/// Product of per-variable factors n_v^pow * base^n_v. Variables are the
/// 1-based argument positions of the predicate the function belongs to.
struct Monomial {
  struct Factor {
    unsigned pow = 0;
    std::uint64_t base = 1;
    friend auto operator<=>(const Factor&, const Factor&) = default;
  };
  std::map<int, Factor> factors;  // only non-trivial factors are stored

  static Monomial one() { return {}; }
  Monomial operator*(const Monomial& o) const;
  unsigned degree() const;
  bool has_exponential() const;

  friend auto operator<=>(const Monomial&, const Monomial&) = default;
};

/// Closed-form cost or size function: a finite sum of c * prod n^a * b^n with
/// rational c and natural a, b. Closed under +, -, *, and under substitution
/// of affine arguments into exponential factors.
class ClosedForm {
 public:
  ClosedForm() = default;
  static ClosedForm constant(const Rational& c);
  static ClosedForm var(int v);
  /// base^(n_v), base >= 1.
  static ClosedForm exp(int v, std::uint64_t base);

  const std::map<Monomial, Rational>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  Rational constant_value() const;  // requires is_constant()
  std::vector<int> vars() const;
  bool depends_on(int v) const;

  ClosedForm operator+(const ClosedForm& o) const;
  ClosedForm operator-(const ClosedForm& o) const;
  ClosedForm operator*(const ClosedForm& o) const;
  ClosedForm scaled(const Rational& c) const;
  ClosedForm pow(unsigned e) const;
  friend bool operator==(const ClosedForm&, const ClosedForm&) = default;

  /// Value at a point; `value_of(v)` supplies n_v.
  Rational eval(const std::function<Integer(int)>& value_of) const;
  Rational eval(const std::vector<std::int64_t>& point) const;  // point[v-1]

  /// Replaces each variable v by args.at(v). Fails (nullopt) when an
  /// exponential factor would receive a non-affine argument.
  std::optional<ClosedForm> substitute(
      const std::map<int, ClosedForm>& args) const;

  /// If this is s*n_v + t with natural s and integer t (single variable or
  /// constant), returns {v, s, t}; v = 0 for constants.
  struct Affine {
    int var;
    Integer scale;
    Integer offset;
  };
  std::optional<Affine> as_affine() const;

  /// Compact rendering: "n1+1", "1/2*n1^2+3/2*n1+1", "2*2^n1-1".
  std::string str() const;

 private:
  void add_term(const Monomial& m, const Rational& c);
  std::map<Monomial, Rational> terms_;
};

/// Closed form in variable `v` of
///   H(N) = a^N * sum_{k=n0+1}^{N} k^p * (b/a)^k
/// i.e. sum_{k=n0+1}^{N} a^(N-k) k^p b^k, with H(n0) = 0. Solved by
/// undetermined coefficients over the exact exponential-polynomial basis.
ClosedForm geometric_power_sum(int v, unsigned p, std::uint64_t a,
                               std::uint64_t b, std::int64_t n0);

}  // namespace costcal::analysis
