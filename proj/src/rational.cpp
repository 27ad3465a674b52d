#include "chamberwalk/rational.hpp"

#include <stdexcept>

namespace chamberwalk {

Rational parse_rational(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty rational literal");
  const auto dot = text.find('.');
  if (dot == std::string::npos) {
    Rational r;
    if (r.set_str(text, 10) != 0) throw std::invalid_argument("bad rational literal: " + text);
    r.canonicalize();
    return r;
  }
  // Exact decimal: "12.345" -> 12345/1000.
  std::string digits = text.substr(0, dot) + text.substr(dot + 1);
  const std::size_t scale = text.size() - dot - 1;
  mpz_class num;
  if (digits == "-" || digits.empty() || num.set_str(digits, 10) != 0)
    throw std::invalid_argument("bad decimal literal: " + text);
  mpz_class den;
  mpz_ui_pow_ui(den.get_mpz_t(), 10, scale);
  Rational r(num, den);
  r.canonicalize();
  return r;
}

Rational power(const Rational& base, long exponent) {
  Rational result = 1;
  Rational b = exponent < 0 ? Rational(1 / base) : base;
  unsigned long e = exponent < 0 ? static_cast<unsigned long>(-exponent) : static_cast<unsigned long>(exponent);
  while (e != 0) {
    if (e & 1u) result *= b;
    b *= b;
    e >>= 1;
  }
  return result;
}

RationalMatrix identity_matrix(std::size_t n) {
  RationalMatrix m(n, RationalVector(n, 0));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1;
  return m;
}

RationalMatrix multiply(const RationalMatrix& a, const RationalMatrix& b) {
  const std::size_t n = a.size();
  const std::size_t inner = b.size();
  const std::size_t cols = inner == 0 ? 0 : b[0].size();
  RationalMatrix c(n, RationalVector(cols, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < inner; ++k) {
      if (sgn(a[i][k]) == 0) continue;
      for (std::size_t j = 0; j < cols; ++j) c[i][j] += a[i][k] * b[k][j];
    }
  return c;
}

RationalVector multiply(const RationalMatrix& a, const RationalVector& v) {
  RationalVector out(a.size(), 0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) out[i] += a[i][j] * v[j];
  return out;
}

}  // namespace chamberwalk
