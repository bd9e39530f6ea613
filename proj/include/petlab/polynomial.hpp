#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "petlab/common.hpp"

namespace petlab {

// Integer polynomial in one variable n, stored as ascending coefficients in
// canonical form (no trailing zeros). The zero polynomial has no
// coefficients. Degree of a constant, and of zero, is 0.
class IntPolynomial {
 public:
  IntPolynomial() = default;
  explicit IntPolynomial(std::vector<BigInt> coeffs);
  IntPolynomial(std::initializer_list<long> coeffs);

  static IntPolynomial constant(const BigInt& c);
  // c * n^k
  static IntPolynomial monomial(const BigInt& c, unsigned k);
  // Sums of terms c, c*n^k, cn^k, n, -n^k ... in the variable n; the inverse
  // of to_string. Throws ConfigError on anything else.
  static IntPolynomial parse(const std::string& text);

  int degree() const noexcept { return coeffs_.empty() ? 0 : static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const noexcept { return coeffs_.empty(); }
  bool is_constant() const noexcept { return coeffs_.size() <= 1; }

  // Coefficient of n^k (zero beyond the degree).
  BigInt coeff(std::size_t k) const;
  BigInt leading() const;
  const std::vector<BigInt>& coeffs() const noexcept { return coeffs_; }

  BigInt evaluate(const BigInt& n) const;
  BigInt evaluate(long n) const { return evaluate(BigInt(n)); }

  // p(n + h), expanded exactly.
  IntPolynomial shifted(const BigInt& h) const;

  IntPolynomial operator-() const;
  IntPolynomial& operator+=(const IntPolynomial& o);
  IntPolynomial& operator-=(const IntPolynomial& o);
  friend IntPolynomial operator+(IntPolynomial a, const IntPolynomial& b) { return a += b; }
  friend IntPolynomial operator-(IntPolynomial a, const IntPolynomial& b) { return a -= b; }
  friend IntPolynomial operator*(const IntPolynomial& a, const IntPolynomial& b);
  IntPolynomial scaled(const BigInt& c) const;

  friend bool operator==(const IntPolynomial&, const IntPolynomial&) = default;
  // Total order used for canonical containers; not a mathematical order.
  friend bool operator<(const IntPolynomial& a, const IntPolynomial& b);

  std::string to_string(const std::string& var = "n") const;

 private:
  void normalize();
  std::vector<BigInt> coeffs_;
};

IntPolynomial poly_shift(const IntPolynomial& p, const BigInt& h);

// Same degree and same leading coefficient. Constants are all equivalent.
bool equivalent(const IntPolynomial& p, const IntPolynomial& q);

}  // namespace petlab
