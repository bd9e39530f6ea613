#pragma once

// Desk-scale measure-preserving systems: rotations and unipotent affine maps
// on T^m with exact polynomial iterates, finite products of cyclic groups
// with commuting shifts, and the observables evaluated on them.

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "petlab/common.hpp"
#include "petlab/fixed_point.hpp"
#include "petlab/polynomial.hpp"

namespace petlab::dynsys {

using Complex = std::complex<double>;

struct TorusPoint {
  std::vector<Fixed> coords;

  TorusPoint() = default;
  explicit TorusPoint(std::vector<Fixed> c) : coords(std::move(c)) {}
  static TorusPoint zero(std::size_t dim, std::size_t limbs);
  static TorusPoint from_rationals(const std::vector<BigRational>& q, std::size_t limbs);

  std::size_t dim() const noexcept { return coords.size(); }
  bool operator==(const TorusPoint& o) const { return coords == o.coords; }
};

// Square integer matrix, row-major.
class IntMatrix {
 public:
  IntMatrix() = default;
  explicit IntMatrix(std::size_t m);
  IntMatrix(std::initializer_list<std::initializer_list<long>> rows);
  static IntMatrix identity(std::size_t m);

  std::size_t dim() const noexcept { return m_; }
  BigInt& operator()(std::size_t i, std::size_t j) { return a_[i * m_ + j]; }
  const BigInt& operator()(std::size_t i, std::size_t j) const { return a_[i * m_ + j]; }
  bool is_zero() const;
  bool is_identity() const;
  BigInt determinant() const;
  // Max over rows of the sum of absolute entries.
  BigInt row_norm() const;

  friend IntMatrix operator*(const IntMatrix& a, const IntMatrix& b);
  friend IntMatrix operator-(const IntMatrix& a, const IntMatrix& b);
  friend bool operator==(const IntMatrix& a, const IntMatrix& b) { return a.m_ == b.m_ && a.a_ == b.a_; }
  std::vector<RealConstant> apply(const std::vector<RealConstant>& v) const;
  std::string to_string() const;

 private:
  std::size_t m_ = 0;
  std::vector<BigInt> a_;
};

// x -> S x + b on T^m with S unipotent. Construction checks (S - I)^m = 0
// and |det S| = 1 and throws HypothesisError otherwise.
class AffineMap {
 public:
  AffineMap(IntMatrix s, std::vector<RealConstant> b, std::size_t limbs = kDefaultLimbs);
  static AffineMap rotation(std::vector<RealConstant> b, std::size_t limbs = kDefaultLimbs);

  std::size_t dim() const noexcept { return s_.dim(); }
  std::size_t limbs() const noexcept { return limbs_; }
  const IntMatrix& matrix() const noexcept { return s_; }
  const std::vector<RealConstant>& translation() const noexcept { return b_; }
  const std::vector<Fixed>& translation_fixed() const noexcept { return b_fixed_; }
  bool is_rotation() const { return s_.is_identity(); }
  // N^k for k = 0 .. m1 - 1, N = S - I, where N^m1 = 0.
  const std::vector<IntMatrix>& nil_powers() const noexcept { return nil_powers_; }

  // Rotation whose translation, together with 1, is rationally independent
  // (decided exactly from the symbolic constants).
  bool is_ergodic_rotation() const;
  bool is_rational_rotation() const;
  // Ergodic iff no non-trivial character k with k (S - I) = 0 has k.b
  // rational; checked exactly on a basis of that lattice.
  bool is_ergodic() const;

  TorusPoint apply(const TorusPoint& x) const;

 private:
  IntMatrix s_;
  std::vector<RealConstant> b_;
  std::size_t limbs_;
  std::vector<Fixed> b_fixed_;
  std::vector<IntMatrix> nil_powers_;
};

// Rank over Q of the irrational parts of the constants: the number of them
// that stay independent together with 1.
std::size_t irrational_rank(const std::vector<RealConstant>& values);

// Bits of precision needed for |n| <= n_bound at the given tolerance
// (2^-tolerance_bits absolute error per coordinate).
std::uint64_t affine_required_bits(const AffineMap& t, const BigInt& n_bound, unsigned tolerance_bits);

// T^n x = sum_k C(n,k) N^k x + sum_k C(n,k+1) N^k b, valid for every integer
// n. Throws PrecisionError when the budget cannot meet the tolerance.
TorusPoint affine_power_apply(const AffineMap& t, const BigInt& n, const TorusPoint& x, unsigned tolerance_bits = 64);

// n -> T^{p(n)} x for consecutive n, via forward differences seeded from the
// closed form (exact in fixed-point arithmetic).
class PolynomialOrbit {
 public:
  PolynomialOrbit(const AffineMap& t, const IntPolynomial& p, const TorusPoint& x, const BigInt& start,
                  const BigInt& end, unsigned tolerance_bits = 64);
  const TorusPoint& current() const noexcept { return current_; }
  void advance();

 private:
  std::vector<DifferenceTable> tables_;
  TorusPoint current_;
};

// Commuting shifts x -> x + a_i on Z/N_1 x ... x Z/N_r (uniform measure).
class FiniteSystem {
 public:
  FiniteSystem(std::vector<std::int64_t> moduli, std::vector<std::vector<std::int64_t>> shifts);
  static FiniteSystem cyclic(std::int64_t n, std::vector<std::int64_t> shifts);

  const std::vector<std::int64_t>& moduli() const noexcept { return moduli_; }
  const std::vector<std::vector<std::int64_t>>& shifts() const noexcept { return shifts_; }
  std::size_t arity() const noexcept { return shifts_.size(); }
  std::size_t size() const noexcept { return size_; }

  std::vector<std::int64_t> coords(std::size_t index) const;
  std::size_t index(const std::vector<std::int64_t>& coords) const;
  // T_map^n x.
  std::size_t apply(std::size_t x, std::size_t map, const BigInt& n) const;
  std::size_t apply(std::size_t x, std::size_t map, std::int64_t n) const;
  // x + sum_j c_j a_{map_j}, for a list of (map, count) pairs.
  std::size_t translate(std::size_t x, const std::vector<std::int64_t>& delta) const;

 private:
  std::vector<std::int64_t> moduli_;
  std::vector<std::vector<std::int64_t>> shifts_;
  std::size_t size_ = 1;
};

struct TrigTerm {
  std::vector<std::int64_t> k;
  Complex c;
};

struct Interval {
  BigRational lo;
  BigRational hi;
};

class Observable {
 public:
  enum class Kind { kTrig, kBox, kFinite, kOrbitAverage };

  static Observable trig(std::size_t dim, std::vector<TrigTerm> terms);
  static Observable constant(std::size_t dim, Complex c);
  // Product of [lo_i, hi_i) with 0 <= lo_i < hi_i <= 1.
  static Observable box(std::vector<Interval> intervals, std::size_t limbs = kDefaultLimbs);
  static Observable finite(std::vector<Complex> values);
  // x -> (1/period) sum_{j < period} base(x + j * step).
  static Observable orbit_average(const Observable& base, std::vector<BigRational> step, std::uint64_t period);

  Kind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<TrigTerm>& terms() const noexcept { return terms_; }
  const std::vector<Interval>& intervals() const noexcept { return intervals_; }
  const std::vector<Complex>& values() const noexcept { return values_; }

  // Exact mean for boxes (product of lengths).
  BigRational box_measure() const;
  Complex mean() const;
  // Upper bound on sup |f|.
  double sup_bound() const;
  bool is_real() const;

  Complex eval(const TorusPoint& x) const;
  Complex eval(std::size_t index) const;  // finite observables

  std::string describe() const;

  // Values at n points into split (re, im) storage; trigonometric terms go
  // through the vectorized e(theta) kernel.
  void eval_batch(const TorusPoint* pts, std::size_t n, double* re, double* im) const;

 private:
  Kind kind_ = Kind::kTrig;
  std::size_t dim_ = 0;
  std::vector<TrigTerm> terms_;
  std::vector<Interval> intervals_;
  std::vector<Fixed> lo_fixed_, hi_fixed_;  // ceil thresholds
  std::vector<bool> hi_is_one_;
  std::vector<Complex> values_;
  std::shared_ptr<const Observable> base_;
  std::vector<Fixed> step_fixed_;
  std::vector<BigRational> step_;
  std::uint64_t period_ = 1;
};

struct CommuteReport {
  bool commute = true;
  std::size_t first = 0;
  std::size_t second = 0;
  std::string witness;
};

CommuteReport commute_check(const std::vector<AffineMap>& maps);
inline CommuteReport commute_check(const FiniteSystem&) { return {}; }

// E(f | I(T^r)) for one map of a finite system (exact orbit averages).
Observable invariant_expectation(const FiniteSystem& sys, std::size_t map, const BigInt& r, const Observable& f);
// E(f | I(T^r)) for an affine map: exact on trigonometric polynomials; for
// boxes only ergodic or rational rotations are supported (period <= cap).
Observable invariant_expectation(const AffineMap& t, const BigInt& r, const Observable& f,
                                 std::uint64_t period_cap = 1u << 16);

// E(f | K_rat).
Observable kronecker_rational_expectation(const FiniteSystem& sys, std::size_t map, const Observable& f);
Observable kronecker_rational_expectation(const AffineMap& t, const Observable& f, std::uint64_t r_cap);

struct SamplingScheme {
  enum class Kind { kGrid, kRandom } kind = Kind::kGrid;
  std::uint64_t resolution = 16;
  std::uint64_t seed = 0;
  std::uint64_t count = 0;

  static SamplingScheme grid(std::uint64_t res) { return {Kind::kGrid, res, 0, 0}; }
  static SamplingScheme random(std::uint64_t seed, std::uint64_t count) { return {Kind::kRandom, 0, seed, count}; }
};

struct TorusSample {
  TorusPoint x;
  double weight;
};

std::vector<TorusSample> sample_measure(std::size_t dim, const SamplingScheme& scheme,
                                        std::size_t limbs = kDefaultLimbs);
// Indices into a finite system; grid returns every point.
std::vector<std::pair<std::size_t, double>> sample_measure(const FiniteSystem& sys, const SamplingScheme& scheme);

}  // namespace petlab::dynsys
