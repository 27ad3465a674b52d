#pragma once

#include <gmpxx.h>

#include <string>
#include <vector>

namespace chamberwalk {

/// Exact rational number backed by GMP.
using Rational = mpq_class;

using RationalVector = std::vector<Rational>;
using RationalMatrix = std::vector<RationalVector>;

inline Rational rational(long num, long den = 1) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

/// Parses "3", "-3/4" or a decimal such as "0.25" (converted exactly).
Rational parse_rational(const std::string& text);

inline std::string to_string(const Rational& r) { return r.get_str(); }

inline double to_double(const Rational& r) { return r.get_d(); }

inline Rational abs_value(const Rational& r) { return abs(r); }

/// Raises to an integer power (negative exponents invert).
Rational power(const Rational& base, long exponent);

RationalMatrix identity_matrix(std::size_t n);
RationalMatrix multiply(const RationalMatrix& a, const RationalMatrix& b);
RationalVector multiply(const RationalMatrix& a, const RationalVector& v);

}  // namespace chamberwalk
