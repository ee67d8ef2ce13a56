#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <string>

namespace costcal {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline bool is_integer(const Rational& r) {
  return boost::multiprecision::denominator(r) == 1;
}

inline Integer to_integer(const Rational& r) {
  return boost::multiprecision::numerator(r) /
         boost::multiprecision::denominator(r);
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// "3", "-1/2".
inline std::string to_string(const Rational& r) {
  if (is_integer(r)) return boost::multiprecision::numerator(r).str();
  return boost::multiprecision::numerator(r).str() + "/" +
         boost::multiprecision::denominator(r).str();
}

/// Exact integer power; `exp` may be negative.
inline Rational rpow(const Rational& base, long long exp) {
  Rational result = 1;
  Rational b = exp < 0 ? Rational(1) / base : base;
  unsigned long long e = exp < 0 ? -exp : exp;
  while (e) {
    if (e & 1) result *= b;
    b *= b;
    e >>= 1;
  }
  return result;
}

}  // namespace costcal
