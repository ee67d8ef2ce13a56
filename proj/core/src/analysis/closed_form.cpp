#include "costcal/analysis/closed_form.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "costcal/error.hpp"

namespace costcal::analysis {
namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a)
    throw Error(ErrorKind::Analysis, "exponential base overflow");
  return a * b;
}

std::uint64_t checked_pow(std::uint64_t b, const Integer& e) {
  if (e > 63 && b > 1)
    throw Error(ErrorKind::Analysis, "exponential base overflow");
  std::uint64_t r = 1;
  for (Integer i = 0; i < e; ++i) r = checked_mul(r, b);
  return r;
}

Rational ipow(const Integer& base, unsigned e) {
  Integer r = 1;
  for (unsigned i = 0; i < e; ++i) r *= base;
  return Rational(r);
}

}  // namespace

Monomial Monomial::operator*(const Monomial& o) const {
  Monomial out = *this;
  for (const auto& [v, f] : o.factors) {
    auto& g = out.factors[v];
    g.pow += f.pow;
    g.base = checked_mul(g.base, f.base);
    if (g.pow == 0 && g.base == 1) out.factors.erase(v);
  }
  return out;
}

unsigned Monomial::degree() const {
  unsigned d = 0;
  for (const auto& [v, f] : factors) d += f.pow;
  return d;
}

bool Monomial::has_exponential() const {
  return std::any_of(factors.begin(), factors.end(),
                     [](const auto& kv) { return kv.second.base != 1; });
}

ClosedForm ClosedForm::constant(const Rational& c) {
  ClosedForm f;
  f.add_term(Monomial::one(), c);
  return f;
}

ClosedForm ClosedForm::var(int v) {
  ClosedForm f;
  Monomial m;
  m.factors[v] = {1, 1};
  f.add_term(m, 1);
  return f;
}

ClosedForm ClosedForm::exp(int v, std::uint64_t base) {
  if (base == 0) throw Error(ErrorKind::Analysis, "exponential base 0");
  if (base == 1) return constant(1);
  ClosedForm f;
  Monomial m;
  m.factors[v] = {0, base};
  f.add_term(m, 1);
  return f;
}

void ClosedForm::add_term(const Monomial& m, const Rational& c) {
  if (c == 0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

bool ClosedForm::is_constant() const {
  return terms_.empty() ||
         (terms_.size() == 1 && terms_.begin()->first.factors.empty());
}

Rational ClosedForm::constant_value() const {
  if (terms_.empty()) return 0;
  return terms_.begin()->second;
}

std::vector<int> ClosedForm::vars() const {
  std::set<int> vs;
  for (const auto& [m, c] : terms_)
    for (const auto& [v, f] : m.factors) vs.insert(v);
  return {vs.begin(), vs.end()};
}

bool ClosedForm::depends_on(int v) const {
  for (const auto& [m, c] : terms_)
    if (m.factors.count(v)) return true;
  return false;
}

ClosedForm ClosedForm::operator+(const ClosedForm& o) const {
  ClosedForm out = *this;
  for (const auto& [m, c] : o.terms_) out.add_term(m, c);
  return out;
}

ClosedForm ClosedForm::operator-(const ClosedForm& o) const {
  ClosedForm out = *this;
  for (const auto& [m, c] : o.terms_) out.add_term(m, -c);
  return out;
}

ClosedForm ClosedForm::operator*(const ClosedForm& o) const {
  ClosedForm out;
  for (const auto& [m1, c1] : terms_)
    for (const auto& [m2, c2] : o.terms_) out.add_term(m1 * m2, c1 * c2);
  return out;
}

ClosedForm ClosedForm::scaled(const Rational& c) const {
  ClosedForm out;
  for (const auto& [m, k] : terms_) out.add_term(m, k * c);
  return out;
}

ClosedForm ClosedForm::pow(unsigned e) const {
  ClosedForm out = constant(1);
  for (unsigned i = 0; i < e; ++i) out = out * *this;
  return out;
}

Rational ClosedForm::eval(const std::function<Integer(int)>& value_of) const {
  Rational sum = 0;
  for (const auto& [m, c] : terms_) {
    Rational t = c;
    for (const auto& [v, f] : m.factors) {
      Integer n = value_of(v);
      if (f.pow) t *= ipow(n, f.pow);
      if (f.base != 1) {
        if (n < 0)
          throw Error(ErrorKind::Domain, "negative exponent in closed form");
        t *= Rational(boost::multiprecision::pow(Integer(f.base),
                                                 n.convert_to<unsigned>()));
      }
    }
    sum += t;
  }
  return sum;
}

Rational ClosedForm::eval(const std::vector<std::int64_t>& point) const {
  return eval([&](int v) -> Integer {
    if (v < 1 || static_cast<std::size_t>(v) > point.size())
      throw Error(ErrorKind::Domain,
                  "no value for size variable n" + std::to_string(v));
    return point[v - 1];
  });
}

std::optional<ClosedForm::Affine> ClosedForm::as_affine() const {
  Affine a{0, 0, 0};
  for (const auto& [m, c] : terms_) {
    if (!is_integer(c)) return std::nullopt;
    if (m.factors.empty()) {
      a.offset = to_integer(c);
      continue;
    }
    if (m.factors.size() != 1) return std::nullopt;
    const auto& [v, f] = *m.factors.begin();
    if (f.pow != 1 || f.base != 1) return std::nullopt;
    if (a.var != 0 && a.var != v) return std::nullopt;
    if (c < 0) return std::nullopt;
    a.var = v;
    a.scale = to_integer(c);
  }
  return a;
}

std::optional<ClosedForm> ClosedForm::substitute(
    const std::map<int, ClosedForm>& args) const {
  ClosedForm out;
  for (const auto& [m, c] : terms_) {
    ClosedForm term = constant(c);
    for (const auto& [v, f] : m.factors) {
      auto it = args.find(v);
      if (it == args.end())
        throw Error(ErrorKind::Analysis,
                    "substitution lacks a value for n" + std::to_string(v));
      const ClosedForm& arg = it->second;
      if (f.pow) term = term * arg.pow(f.pow);
      if (f.base != 1) {
        auto aff = arg.as_affine();
        if (!aff) return std::nullopt;
        Rational k = rpow(Rational(f.base), aff->offset.convert_to<long long>());
        if (aff->var == 0) {
          term = term.scaled(k);
        } else {
          ClosedForm e = ClosedForm::exp(aff->var, checked_pow(f.base, aff->scale));
          term = term * e.scaled(k);
        }
      }
    }
    out = out + term;
  }
  return out;
}

std::string ClosedForm::str() const {
  if (terms_.empty()) return "0";
  std::vector<std::pair<Monomial, Rational>> ts(terms_.begin(), terms_.end());
  auto max_base = [](const Monomial& m) {
    std::uint64_t b = 1;
    for (const auto& [v, f] : m.factors) b = std::max(b, f.base);
    return b;
  };
  std::stable_sort(ts.begin(), ts.end(), [&](const auto& x, const auto& y) {
    auto bx = max_base(x.first), by = max_base(y.first);
    if (bx != by) return bx > by;
    if (x.first.degree() != y.first.degree())
      return x.first.degree() > y.first.degree();
    return x.first < y.first;
  });
  std::string out;
  for (const auto& [m, c] : ts) {
    std::string mono;
    for (const auto& [v, f] : m.factors) {
      std::string name = "n" + std::to_string(v);
      if (f.pow) {
        if (!mono.empty()) mono += '*';
        mono += name;
        if (f.pow > 1) mono += "^" + std::to_string(f.pow);
      }
      if (f.base != 1) {
        if (!mono.empty()) mono += '*';
        mono += std::to_string(f.base) + "^" + name;
      }
    }
    std::string term;
    if (mono.empty()) {
      term = to_string(c);
    } else if (c == 1) {
      term = mono;
    } else if (c == -1) {
      term = "-" + mono;
    } else {
      term = to_string(c) + "*" + mono;
    }
    if (!out.empty() && term.front() != '-') out += '+';
    out += term;
  }
  return out;
}

ClosedForm geometric_power_sum(int v, unsigned p, std::uint64_t a,
                               std::uint64_t b, std::int64_t n0) {
  if (a == 0 || b == 0)
    throw Error(ErrorKind::Analysis, "geometric sum needs positive bases");
  const std::size_t dim = p + 2;
  // Basis functions of N.
  std::vector<ClosedForm> basis;
  if (a == b) {
    for (unsigned j = 0; j <= p + 1; ++j)
      basis.push_back(ClosedForm::var(v).pow(j) * ClosedForm::exp(v, a));
  } else {
    for (unsigned j = 0; j <= p; ++j)
      basis.push_back(ClosedForm::var(v).pow(j) * ClosedForm::exp(v, b));
    basis.push_back(ClosedForm::exp(v, a));
  }
  // Target values H(n0 + i) by the defining recurrence.
  std::vector<Rational> target(dim);
  Rational h = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    Integer N = n0 + static_cast<std::int64_t>(i);
    if (i > 0) {
      h = Rational(a) * h + ipow(N, p) *
                                Rational(boost::multiprecision::pow(
                                    Integer(b), N.convert_to<unsigned>()));
    }
    target[i] = h;
  }
  std::vector<std::vector<Rational>> A(dim, std::vector<Rational>(dim + 1));
  for (std::size_t i = 0; i < dim; ++i) {
    Integer N = n0 + static_cast<std::int64_t>(i);
    for (std::size_t j = 0; j < dim; ++j)
      A[i][j] = basis[j].eval([&](int) { return N; });
    A[i][dim] = target[i];
  }
  // Exact Gauss-Jordan elimination.
  for (std::size_t col = 0; col < dim; ++col) {
    std::size_t piv = col;
    while (piv < dim && A[piv][col] == 0) ++piv;
    if (piv == dim)
      throw Error(ErrorKind::Analysis, "singular basis in geometric sum");
    std::swap(A[piv], A[col]);
    for (std::size_t r = 0; r < dim; ++r) {
      if (r == col || A[r][col] == 0) continue;
      Rational f = A[r][col] / A[col][col];
      for (std::size_t k = col; k <= dim; ++k) A[r][k] -= f * A[col][k];
    }
  }
  ClosedForm out;
  for (std::size_t j = 0; j < dim; ++j)
    out = out + basis[j].scaled(A[j][dim] / A[j][j]);
  return out;
}

}  // namespace costcal::analysis
