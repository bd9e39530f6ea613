#pragma once

// Gowers-Host-Kra seminorms of functions on finite systems (by cube
// enumeration and by the recursion through f * conj(T^n f)), a windowed
// version of the recursion for trigonometric polynomials on tori, dual
// functions, and uniformity seminorms of individual sequences.
//
// For a finite system with the shift x -> x + a of period P, the cube
// measure is the average over x in X and h in [0, P)^k, and
//   |||f|||_k^{2^k} = E_{x,h} prod_eps C^{|eps|} f(x + (eps.h) a),
// C being complex conjugation.

#include <functional>
#include <string>
#include <vector>

#include "petlab/averages.hpp"
#include "petlab/dynsys.hpp"

namespace petlab::seminorms {

using dynsys::AffineMap;
using dynsys::Complex;
using dynsys::FiniteSystem;
using dynsys::IntMatrix;
using dynsys::Observable;

// |X| * P^k above this is refused by the enumerating routines.
inline constexpr std::uint64_t kOracleCap = std::uint64_t{1} << 24;

struct CubeAverageResult {
  enum class Method { kRecursive, kBruteForce };
  int k = 1;
  double value = 0;  // the seminorm
  double power = 0;  // value^{2^k}, as computed (may be -0 from rounding)
  Method method = Method::kBruteForce;
};

std::string to_string(CubeAverageResult::Method m);

// Period of the given shift.
std::int64_t shift_period(const FiniteSystem& sys, std::size_t map);

CubeAverageResult gowers_seminorm_finite(const FiniteSystem& sys, std::size_t map, const std::vector<Complex>& f,
                                         int k);
CubeAverageResult gowers_seminorm_recursive(const FiniteSystem& sys, std::size_t map, const std::vector<Complex>& f,
                                            int k);
// Recursion with the limits over n replaced by averages over [0, window);
// f must be a trigonometric polynomial. The base case is exact.
CubeAverageResult gowers_seminorm_torus(const AffineMap& t, const Observable& f, int k, std::int64_t window);

// E_{x,h} prod_eps C^{|eps|} f_eps(x + (eps.h) a), f indexed by the binary
// digits of eps (bit j is eps_{j+1}).
Complex cube_integral(const FiniteSystem& sys, std::size_t map, const std::vector<std::vector<Complex>>& fs, int k);

struct DualResult {
  std::vector<Complex> values;
  // |int f * D_k f - |||f|||_k^{2^k}|, checked on every call.
  double identity_residual = 0;
};

// D_k f(x) = E_h prod_{eps != 0} C^{|eps|} f(x + (eps.h) a). For k = 1 this
// is the conjugate of E(f | I), i.e. E(f | I) for real f.
DualResult dual_function(const FiniteSystem& sys, std::size_t map, const std::vector<Complex>& f, int k);

// Real sequences are produced in blocks: fill(start, count, out) writes
// a_start .. a_{start+count-1}.
using RealSequence = std::function<void(std::int64_t start, std::size_t count, double* out)>;

// Deterministic +-1 signs from SplitMix64 of (seed << 32) + n.
RealSequence random_signs(std::uint64_t seed);
// Re f(T^{p(n)} x).
RealSequence orbit_real_part(const AffineMap& t, const IntPolynomial& p, const dynsys::TorusPoint& x,
                             const Observable& f);

struct IntervalSequence {
  std::vector<averages::Window> intervals;
  // Lengths must be strictly increasing.
  void validate() const;
};

struct UniformityRow {
  std::vector<std::int64_t> h;
  double c_final = 0;  // on the last interval
  double gap = 0;      // |c(last) - c(previous)|
};

struct UniformityReport {
  int k = 2;
  std::int64_t H = 0;
  // (1/H^k) sum_{h in [1,H]^k} c_h; may be slightly negative at finite length.
  double mean = 0;
  // |mean|^{1/2^k}: the estimate of |||a|||_{I,k}, conservative when mean < 0.
  double value = 0;
  bool negative_mean = false;
  double max_gap = 0;
  bool stabilized = true;  // max_gap <= tolerance
  std::vector<UniformityRow> table;
};

UniformityReport seq_uniformity_seminorm(const RealSequence& a, const IntervalSequence& I, int k, std::int64_t H,
                                         double tolerance);

// (1/|I_N|) sum_{n in I_N} a_n u_n for each interval.
std::vector<double> seq_correlation_test(const RealSequence& a, const RealSequence& u, const IntervalSequence& I);

}  // namespace petlab::seminorms
