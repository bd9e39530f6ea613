#pragma once

// Weyl sums of real polynomials, truncated Weyl-criterion tests for point
// sequences on tori, the joint test for (T^{n^d} x, u(n)), scans for the
// set of return times of a box under polynomial iterates of commuting
// rotations, and the conditional-expectation lower bound on finite spaces.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "petlab/averages.hpp"
#include "petlab/dynsys.hpp"

namespace petlab::equidist {

using averages::Window;
using dynsys::AffineMap;
using dynsys::Complex;
using dynsys::Observable;
using dynsys::TorusPoint;

// Polynomial with exact real coefficients, ascending order, no trailing
// zeros.
class RealPolynomial {
 public:
  RealPolynomial() = default;
  explicit RealPolynomial(std::vector<RealConstant> coeffs);
  static RealPolynomial monomial(const RealConstant& c, unsigned k);

  int degree() const noexcept { return coeffs_.empty() ? 0 : static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const noexcept { return coeffs_.empty(); }
  const std::vector<RealConstant>& coeffs() const noexcept { return coeffs_; }
  RealConstant coeff(std::size_t k) const;

  // t^k divides p (exact: the first k coefficients vanish symbolically).
  bool divisible_by_power(unsigned k) const;
  RealPolynomial operator-() const;
  std::string to_string(const std::string& var = "n") const;

 private:
  std::vector<RealConstant> coeffs_;
};

// Fractional bits needed so that p(n) is within 2^-tolerance_bits for every
// |n| <= n_bound.
std::uint64_t required_bits(const RealPolynomial& p, std::int64_t n_bound, unsigned tolerance_bits);

// Phases of p(n) for n = start, start + 1, ...; exact forward differences of
// the rounded coefficients. Throws PrecisionError if [start, end] cannot be
// covered at the tolerance.
class PhaseStream {
 public:
  PhaseStream(const RealPolynomial& p, std::int64_t start, std::int64_t end, std::size_t limbs,
              unsigned tolerance_bits = 64);
  std::uint64_t current() const { return table_.value().top64(); }
  void advance() { table_.advance(); }

 private:
  DifferenceTable table_;
};

// (1/(N-M)) sum_{n in [M, N)} e(p(n)). Conjugation-symmetric in p
// bit-for-bit: of p and -p the one with the smaller textual form is summed.
Complex weyl_average(const RealPolynomial& p, Window w, std::size_t limbs = kDefaultLimbs,
                     unsigned tolerance_bits = 64);

// A sequence of points on T^m given by the phases (top 64 bits) of their
// coordinates. fill(start, count, out) writes coordinate j of x_{start+i} to
// out[j * count + i]; sequential calls are cheap, any other start reseeds.
struct PointSequence {
  std::size_t dim = 0;
  std::function<void(std::int64_t start, std::size_t count, std::uint64_t* out)> fill;
};

// n -> (p_1(n), ..., p_m(n)) for n in [0, n_end).
PointSequence polynomial_sequence(std::vector<RealPolynomial> coords, std::int64_t n_end,
                                  std::size_t limbs = kDefaultLimbs, unsigned tolerance_bits = 64);
// n -> T^{p(n)} x for n in [0, n_end).
PointSequence affine_orbit_sequence(const AffineMap& t, const IntPolynomial& p, const TorusPoint& x,
                                    std::int64_t n_end, unsigned tolerance_bits = 64);
// n -> (a_n, b_n).
PointSequence concat(PointSequence a, PointSequence b);

struct FrequencyRow {
  std::vector<std::int64_t> k;
  double magnitude = 0;
};

struct EquidistVerdict {
  std::int64_t N = 0;
  int K = 0;
  double tol = 0;
  bool pass = true;
  double worst = 0;
  std::vector<std::int64_t> worst_k;
  // One row per frequency up to sign: first non-zero entry positive,
  // lexicographic order.
  std::vector<FrequencyRow> rows;
};

// max over 0 < |k|_inf <= K of |(1/N) sum_{n<N} e(k.x_n)|; pass iff it is
// below tol. K and tol have no defaults on purpose.
EquidistVerdict equidist_test(const PointSequence& seq, std::int64_t N, int K, double tol);

enum class ConditionStatus { kHolds, kViolated, kNotChecked };
std::string to_string(ConditionStatus s);

// k1.b + k2.x in Z forces k2 = 0, decided exactly for a point given by
// exact constants.
struct ConditionCheck {
  ConditionStatus status = ConditionStatus::kNotChecked;
  std::string witness;
};

ConditionCheck genericity_condition(const AffineMap& t, const std::vector<RealConstant>& x);

struct PairSample {
  TorusPoint x;
  std::optional<std::vector<RealConstant>> exact;
};

struct PairResult {
  EquidistVerdict verdict;
  ConditionCheck condition;
};

struct AffinePairReport {
  int d = 1;
  // Identically zero components of u are dropped; with none left the pair
  // test is the test of (T^{n^d} x) alone and u_verdict is empty.
  std::size_t u_dim = 0;
  std::optional<EquidistVerdict> u_verdict;
  std::vector<PairResult> results;
  bool all_pass = true;
};

// Requires T ergodic and every u_i divisible by t^{d+1}, and u must pass its
// own test at (N, K, tol); otherwise HypothesisError.
AffinePairReport affine_pair_test(const AffineMap& t, int d, const std::vector<RealPolynomial>& u,
                                  const std::vector<PairSample>& xs, std::int64_t N, int K, double tol);

struct RecurrenceSpec {
  std::vector<AffineMap> maps;
  std::vector<IntPolynomial> polys;  // zero constant terms
  Observable A;                      // a box
  BigRational epsilon;
  std::int64_t n_max = 0;
  std::int64_t r_cap = 1;
  // Only for the sampled fallback.
  std::uint64_t samples = 4096;
  std::uint64_t seed = 0;
};

struct RecurrenceReport {
  enum class Method { kExact, kSampled };
  Method method = Method::kExact;
  std::int64_t n_max = 0;
  std::int64_t r = 1;
  std::vector<double> mean_by_r;  // mean measure over [0, n_max] for r = 1 .. r_cap
  BigRational threshold;          // mu(A)^{l+1} - epsilon
  std::vector<double> measures;   // n = 0 .. n_max, for the chosen r
  std::vector<std::int64_t> qualifying;
  // Largest difference of consecutive qualifying n; empty with fewer than two.
  std::optional<std::int64_t> max_gap;
  // Family satisfies t^{deg p_i + 1} | p_{i+1} in the given order.
  bool in_proven_scope = true;
};

std::string to_string(RecurrenceReport::Method m);

// Scans n in [0, n_max] for mu(A ∩ T_1^{-p_1(rn)} A ∩ ... ) >= threshold.
// Exact rational measures when every map is a rotation.
RecurrenceReport recurrence_set(const RecurrenceSpec& spec);

struct HolderResult {
  BigRational lhs;
  BigRational rhs;
  bool holds = true;
};

// int f E(f|X_1) ... E(f|X_l) dmu against (int f dmu)^{l+1}, exactly.
// partitions[i][x] is the cell of x in X_i.
HolderResult holder_lowerbound_check(std::vector<BigRational> mu,
                                     const std::vector<std::vector<std::size_t>>& partitions,
                                     std::vector<BigRational> f);

}  // namespace petlab::equidist
