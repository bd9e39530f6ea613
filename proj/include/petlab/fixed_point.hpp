#pragma once

// Fixed-point elements of R/Z and exactly represented real constants.
//
// A Fixed holds B = 64 * limbs fractional bits; the integer part is dropped,
// so addition, subtraction and multiplication by an integer are exact
// modulo 2^-B. Real constants are kept symbolically as q0 + sum q_k sqrt(k)
// (k squarefree, q rational) and rounded to a Fixed on demand.

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "petlab/common.hpp"

namespace petlab {

inline constexpr std::size_t kMaxLimbs = 16;
inline constexpr std::size_t kDefaultLimbs = 4;

// Validates a bit budget (positive multiple of 64, at most 1024) and
// returns the limb count.
std::size_t limbs_for_bits(std::uint64_t bits);

class Fixed {
 public:
  Fixed() : Fixed(kDefaultLimbs) {}
  explicit Fixed(std::size_t limbs);

  // floor(q * 2^B) mod 2^B.
  static Fixed from_rational(const BigRational& q, std::size_t limbs);
  // Interprets v as v / 2^B mod 1.
  static Fixed from_integer_numerator(const BigInt& v, std::size_t limbs);

  std::size_t limbs() const noexcept { return n_; }
  std::size_t bits() const noexcept { return 64 * n_; }
  const std::uint64_t* data() const noexcept { return w_.data(); }
  std::uint64_t* data() noexcept { return w_.data(); }

  // The top 64 fractional bits: the phase in units of 2^-64 turns.
  std::uint64_t top64() const noexcept { return w_[n_ - 1]; }
  double to_double() const noexcept;
  BigInt numerator() const;  // integer X with value X / 2^B
  BigRational to_rational() const;

  Fixed& operator+=(const Fixed& o);
  Fixed& operator-=(const Fixed& o);
  Fixed operator-() const;
  friend Fixed operator+(Fixed a, const Fixed& b) { return a += b; }
  friend Fixed operator-(Fixed a, const Fixed& b) { return a -= b; }

  // k * x mod 1, exact modulo 2^-B.
  Fixed times(const BigInt& k) const;
  Fixed times(std::int64_t k) const;
  // Adds k * o in place (small k).
  void add_times(const Fixed& o, std::int64_t k);

  bool operator==(const Fixed& o) const noexcept;
  bool operator!=(const Fixed& o) const noexcept { return !(*this == o); }
  // Compare as integers X in [0, 2^B).
  int compare(const Fixed& o) const noexcept;

  std::string to_hex() const;

 private:
  std::size_t n_ = kDefaultLimbs;
  std::array<std::uint64_t, kMaxLimbs> w_{};
};

// An exact real number q0 + sum_k q_k sqrt(k).
class RealConstant {
 public:
  RealConstant() = default;
  RealConstant(const BigRational& q);  // NOLINT(google-explicit-constructor)
  RealConstant(long v) : RealConstant(BigRational(v)) {}  // NOLINT(google-explicit-constructor)

  // coeff * sqrt(k); k is reduced to its squarefree part.
  static RealConstant sqrt(unsigned long k, const BigRational& coeff = 1);

  // Grammar: sums and differences of terms; a term is a product of
  // integers and sqrt(k) factors, optionally divided by integers. Examples:
  // "1/3", "sqrt(2)-1", "2*sqrt(3)/5". Decimal literals are rejected: an
  // irrational constant must be declared, never inferred from digits.
  static RealConstant parse(const std::string& text);

  const BigRational& rational_part() const noexcept { return q0_; }
  const std::map<unsigned long, BigRational>& atoms() const noexcept { return atoms_; }
  bool is_rational() const noexcept { return atoms_.empty(); }
  bool is_zero() const noexcept { return atoms_.empty() && q0_ == 0; }
  // Rational and an integer.
  bool is_integer() const;

  RealConstant& operator+=(const RealConstant& o);
  RealConstant& operator-=(const RealConstant& o);
  RealConstant operator-() const;
  friend RealConstant operator+(RealConstant a, const RealConstant& b) { return a += b; }
  friend RealConstant operator-(RealConstant a, const RealConstant& b) { return a -= b; }
  friend RealConstant operator*(const RealConstant& a, const RealConstant& b);
  RealConstant scaled(const BigRational& c) const;

  bool operator==(const RealConstant& o) const;
  bool operator!=(const RealConstant& o) const { return !(*this == o); }

  // Rounded down to within one unit of 2^-B, reduced mod 1.
  Fixed to_fixed(std::size_t limbs) const;
  double to_double() const;
  std::string to_string() const;

 private:
  void prune();
  BigRational q0_ = 0;
  std::map<unsigned long, BigRational> atoms_;
};

// Forward-difference table for a sequence that is polynomial of degree <= D
// in n modulo 2^-B. Seeded with D+1 consecutive values; advance() steps n by
// one using D additions, reproducing the fixed-point values exactly.
class DifferenceTable {
 public:
  DifferenceTable() = default;
  explicit DifferenceTable(const std::vector<Fixed>& initial_values);

  const Fixed& value() const { return diffs_.front(); }
  void advance();
  std::size_t degree() const noexcept { return diffs_.empty() ? 0 : diffs_.size() - 1; }

 private:
  std::vector<Fixed> diffs_;
};

// Number of bits in |v| (0 for v = 0).
std::uint64_t bit_length(const BigInt& v);

}  // namespace petlab
