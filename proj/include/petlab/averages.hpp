#pragma once

// Multiple ergodic averages along polynomial iterates on the model systems,
// their L2 norms over sampled points, convergence probes, weighted averages
// and a numerical van der Corput diagnostic.

#include <functional>
#include <vector>

#include "petlab/dynsys.hpp"

namespace petlab::averages {

using dynsys::AffineMap;
using dynsys::Complex;
using dynsys::FiniteSystem;
using dynsys::Observable;
using dynsys::TorusPoint;

// A commuting tuple T_1, ..., T_l: unipotent affine maps of one torus or the
// shifts of a finite system. Torus tuples are checked for commutation.
class ModelSystem {
 public:
  static ModelSystem torus(std::vector<AffineMap> maps);
  static ModelSystem finite(FiniteSystem sys);

  bool is_finite() const noexcept { return finite_.has_value(); }
  std::size_t arity() const noexcept;
  const std::vector<AffineMap>& maps() const noexcept { return maps_; }
  const FiniteSystem& finite_system() const { return *finite_; }
  std::size_t dim() const;
  std::size_t limbs() const;

 private:
  std::vector<AffineMap> maps_;
  std::optional<FiniteSystem> finite_;
};

// n runs over [M, N).
struct Window {
  std::int64_t M = 0;
  std::int64_t N = 0;
  std::int64_t length() const noexcept { return N - M; }
};

struct AverageSpec {
  ModelSystem system;
  std::vector<IntPolynomial> polys;
  std::vector<Observable> observables;
  Window window;
  unsigned tolerance_bits = 64;

  // Throws ConfigError on arity or window mismatches.
  void validate() const;
};

// (1/(N-M)) sum_{n=M}^{N-1} prod_i f_i(T_i^{p_i(n)} x).
Complex multi_average(const AverageSpec& spec, const TorusPoint& x);
Complex multi_average(const AverageSpec& spec, std::size_t x);

// The whole sequence prod_i f_i(T_i^{p_i(n)} x), n in the window.
std::vector<Complex> product_sequence(const AverageSpec& spec, const TorusPoint& x);
std::vector<Complex> product_sequence(const AverageSpec& spec, std::size_t x);

// Weighted RMS of multi_average over the sample points.
double l2_norm_of_averages(const AverageSpec& spec, const std::vector<dynsys::TorusSample>& samples);
double l2_norm_of_averages(const AverageSpec& spec, const std::vector<std::pair<std::size_t, double>>& samples);

// N_j = base * 2^j with M_j = 0, or M_j = N_j / 2 for the shifted schedule.
std::vector<Window> default_schedule(std::size_t count, bool shifted, std::int64_t base = 1000);

struct ProbeReport {
  std::vector<Window> windows;
  std::vector<Complex> values;
  // |v_j - v_{j-1}| for j >= 1.
  std::vector<double> gaps;
  // Max |v_i - v_j| over the second half of the schedule.
  double tail_gap = 0;
};

using Sequence = std::function<Complex(std::int64_t)>;

ProbeReport convergence_probe(const Sequence& a, const std::vector<Window>& windows);
ProbeReport convergence_probe(const AverageSpec& spec, const TorusPoint& x, const std::vector<Window>& windows);
ProbeReport convergence_probe(const AverageSpec& spec, std::size_t x, const std::vector<Window>& windows);

// u_n = g(c^n y) for an affine map c, or an explicit table, with a declared
// sup bound.
class WeightSequence {
 public:
  static WeightSequence orbit(AffineMap c, TorusPoint y, Observable g);
  static WeightSequence table(Sequence u, double bound);

  double bound() const noexcept { return bound_; }
  std::vector<Complex> values(const Window& w) const;

 private:
  std::optional<AffineMap> map_;
  TorusPoint base_;
  std::optional<Observable> g_;
  Sequence table_;
  double bound_ = 1;
};

// (1/(N-M)) sum f(T^{p(n)} x) u_n for a spec with a single factor.
Complex weighted_average(const AverageSpec& spec, const WeightSequence& u, const TorusPoint& x);

struct VdcReport {
  std::vector<double> b;  // b_1 .. b_H
  double bound = 0;       // (1/H) sum b_h
};

// v_n is a vector of samples of a function; <u, w> = sum_j weight_j u_j conj(w_j).
using VectorSequence = std::function<std::vector<Complex>(std::int64_t)>;
VdcReport vdc_numeric_bound(const VectorSequence& v, const std::vector<double>& weights, std::int64_t H,
                            const Window& window);

}  // namespace petlab::averages
