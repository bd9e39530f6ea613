#include "petlab/averages.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "petlab/kernels.hpp"

namespace petlab::averages {

namespace {

constexpr std::size_t kBlock = 4096;

// p(n) mod m for m > 0, without big integers.
std::int64_t poly_mod(const IntPolynomial& p, std::int64_t n, std::int64_t m) {
  __int128 acc = 0;
  const __int128 nm = ((static_cast<__int128>(n) % m) + m) % m;
  const auto& c = p.coeffs();
  for (std::size_t i = c.size(); i-- > 0;) {
    BigInt r;
    mpz_fdiv_r_ui(r.get_mpz_t(), c[i].get_mpz_t(), static_cast<unsigned long>(m));
    acc = (acc * nm + r.get_si()) % m;
  }
  return static_cast<std::int64_t>(acc);
}

struct Split {
  std::vector<double> re, im;
};

// prod_i f_i(T_i^{p_i(n)} x) over the window, torus case.
Split product_split(const AverageSpec& spec, const TorusPoint& x) {
  spec.validate();
  if (spec.system.is_finite()) throw ConfigError("finite system evaluated at a torus point");
  const auto len = static_cast<std::size_t>(spec.window.length());
  Split out{std::vector<double>(len, 1.0), std::vector<double>(len, 0.0)};
  const auto& k = kernels::active();
  std::vector<TorusPoint> pts;
  std::vector<double> re(kBlock), im(kBlock);
  for (std::size_t i = 0; i < spec.polys.size(); ++i) {
    dynsys::PolynomialOrbit orbit(spec.system.maps()[i], spec.polys[i], x, BigInt(spec.window.M),
                                  BigInt(spec.window.N - 1), spec.tolerance_bits);
    for (std::size_t start = 0; start < len; start += kBlock) {
      const std::size_t count = std::min(kBlock, len - start);
      pts.clear();
      for (std::size_t j = 0; j < count; ++j) {
        pts.push_back(orbit.current());
        orbit.advance();
      }
      spec.observables[i].eval_batch(pts.data(), count, re.data(), im.data());
      k.complex_mul_inplace(out.re.data() + start, out.im.data() + start, re.data(), im.data(), count);
    }
  }
  return out;
}

Split product_split(const AverageSpec& spec, std::size_t x) {
  spec.validate();
  if (!spec.system.is_finite()) throw ConfigError("torus system evaluated at a finite index");
  const auto& sys = spec.system.finite_system();
  if (x >= sys.size()) throw ConfigError("point index out of range");
  std::int64_t period = 1;
  for (auto m : sys.moduli()) period = std::lcm(period, m);
  const auto len = static_cast<std::size_t>(spec.window.length());
  Split out{std::vector<double>(len), std::vector<double>(len)};
  for (std::size_t j = 0; j < len; ++j) {
    const std::int64_t n = spec.window.M + static_cast<std::int64_t>(j);
    Complex prod = 1.0;
    for (std::size_t i = 0; i < spec.polys.size(); ++i) {
      std::size_t y = sys.apply(x, i, poly_mod(spec.polys[i], n, period));
      prod *= spec.observables[i].eval(y);
    }
    out.re[j] = prod.real();
    out.im[j] = prod.imag();
  }
  return out;
}

Complex mean_of(const Split& s) {
  const auto& k = kernels::active();
  const auto n = s.re.size();
  return Complex(k.sum(s.re.data(), n), k.sum(s.im.data(), n)) / static_cast<double>(n);
}

std::vector<Complex> to_complex(const Split& s) {
  std::vector<Complex> out(s.re.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {s.re[i], s.im[i]};
  return out;
}

}  // namespace

ModelSystem ModelSystem::torus(std::vector<AffineMap> maps) {
  if (maps.empty()) throw ConfigError("a commuting tuple needs at least one map");
  for (const auto& m : maps) {
    if (m.dim() != maps.front().dim()) throw ConfigError("maps act on tori of different dimensions");
    if (m.limbs() != maps.front().limbs()) throw ConfigError("maps use different precisions");
  }
  auto rep = dynsys::commute_check(maps);
  if (!rep.commute)
    throw HypothesisError("maps " + std::to_string(rep.first) + " and " + std::to_string(rep.second) +
                          " do not commute: " + rep.witness);
  ModelSystem s;
  s.maps_ = std::move(maps);
  return s;
}

ModelSystem ModelSystem::finite(FiniteSystem sys) {
  ModelSystem s;
  s.finite_ = std::move(sys);
  return s;
}

std::size_t ModelSystem::arity() const noexcept { return finite_ ? finite_->arity() : maps_.size(); }

std::size_t ModelSystem::dim() const { return finite_ ? 0 : maps_.front().dim(); }

std::size_t ModelSystem::limbs() const { return finite_ ? kDefaultLimbs : maps_.front().limbs(); }

void AverageSpec::validate() const {
  if (polys.size() != observables.size())
    throw ConfigError(std::to_string(polys.size()) + " polynomials but " + std::to_string(observables.size()) +
                      " observables");
  if (polys.size() != system.arity())
    throw ConfigError(std::to_string(polys.size()) + " polynomials but the system has " +
                      std::to_string(system.arity()) + " maps");
  if (window.N <= window.M) throw ConfigError("window must satisfy N > M");
  for (const auto& f : observables) {
    if (system.is_finite()) {
      if (f.kind() != Observable::Kind::kFinite || f.values().size() != system.finite_system().size())
        throw ConfigError("finite systems need observables given by their values");
    } else if (f.kind() == Observable::Kind::kFinite || f.dim() != system.dim()) {
      throw ConfigError("observable " + f.describe() + " does not live on the torus of the system");
    }
  }
}

Complex multi_average(const AverageSpec& spec, const TorusPoint& x) { return mean_of(product_split(spec, x)); }
Complex multi_average(const AverageSpec& spec, std::size_t x) { return mean_of(product_split(spec, x)); }

std::vector<Complex> product_sequence(const AverageSpec& spec, const TorusPoint& x) {
  return to_complex(product_split(spec, x));
}
std::vector<Complex> product_sequence(const AverageSpec& spec, std::size_t x) {
  return to_complex(product_split(spec, x));
}

double l2_norm_of_averages(const AverageSpec& spec, const std::vector<dynsys::TorusSample>& samples) {
  double num = 0, den = 0;
  for (const auto& s : samples) {
    num += s.weight * std::norm(multi_average(spec, s.x));
    den += s.weight;
  }
  if (den <= 0) throw ConfigError("sample weights must have a positive sum");
  return std::sqrt(num / den);
}

double l2_norm_of_averages(const AverageSpec& spec, const std::vector<std::pair<std::size_t, double>>& samples) {
  double num = 0, den = 0;
  for (const auto& [x, w] : samples) {
    num += w * std::norm(multi_average(spec, x));
    den += w;
  }
  if (den <= 0) throw ConfigError("sample weights must have a positive sum");
  return std::sqrt(num / den);
}

std::vector<Window> default_schedule(std::size_t count, bool shifted, std::int64_t base) {
  std::vector<Window> out;
  for (std::size_t j = 0; j < count; ++j) {
    const std::int64_t n = base << j;
    out.push_back({shifted ? n / 2 : 0, n});
  }
  return out;
}

namespace {

ProbeReport finish_probe(std::vector<Window> windows, std::vector<Complex> values) {
  ProbeReport r;
  r.windows = std::move(windows);
  r.values = std::move(values);
  for (std::size_t j = 1; j < r.values.size(); ++j) r.gaps.push_back(std::abs(r.values[j] - r.values[j - 1]));
  const std::size_t tail = r.values.size() / 2;
  for (std::size_t i = tail; i < r.values.size(); ++i)
    for (std::size_t j = i + 1; j < r.values.size(); ++j)
      r.tail_gap = std::max(r.tail_gap, std::abs(r.values[i] - r.values[j]));
  return r;
}

template <class Point>
ProbeReport probe_spec(const AverageSpec& spec, const Point& x, const std::vector<Window>& windows) {
  std::vector<Complex> values;
  AverageSpec s = spec;
  for (const auto& w : windows) {
    s.window = w;
    values.push_back(multi_average(s, x));
  }
  return finish_probe(windows, std::move(values));
}

}  // namespace

ProbeReport convergence_probe(const Sequence& a, const std::vector<Window>& windows) {
  std::vector<Complex> values;
  const auto& k = kernels::active();
  for (const auto& w : windows) {
    if (w.N <= w.M) throw ConfigError("window must satisfy N > M");
    const auto len = static_cast<std::size_t>(w.length());
    std::vector<double> re(len), im(len);
    for (std::size_t j = 0; j < len; ++j) {
      Complex v = a(w.M + static_cast<std::int64_t>(j));
      re[j] = v.real();
      im[j] = v.imag();
    }
    values.emplace_back(k.sum(re.data(), len) / static_cast<double>(len), k.sum(im.data(), len) / static_cast<double>(len));
  }
  return finish_probe(windows, std::move(values));
}

ProbeReport convergence_probe(const AverageSpec& spec, const TorusPoint& x, const std::vector<Window>& windows) {
  return probe_spec(spec, x, windows);
}

ProbeReport convergence_probe(const AverageSpec& spec, std::size_t x, const std::vector<Window>& windows) {
  return probe_spec(spec, x, windows);
}

WeightSequence WeightSequence::orbit(AffineMap c, TorusPoint y, Observable g) {
  if (g.kind() == Observable::Kind::kFinite || g.dim() != c.dim())
    throw ConfigError("weight observable must live on the torus of its map");
  WeightSequence w;
  w.bound_ = g.sup_bound();
  w.map_ = std::move(c);
  w.base_ = std::move(y);
  w.g_ = std::move(g);
  return w;
}

WeightSequence WeightSequence::table(Sequence u, double bound) {
  if (!(bound >= 0)) throw ConfigError("weight bound must be non-negative");
  WeightSequence w;
  w.table_ = std::move(u);
  w.bound_ = bound;
  return w;
}

std::vector<Complex> WeightSequence::values(const Window& w) const {
  if (w.N <= w.M) throw ConfigError("window must satisfy N > M");
  const auto len = static_cast<std::size_t>(w.length());
  std::vector<Complex> out(len);
  if (table_) {
    for (std::size_t j = 0; j < len; ++j) {
      out[j] = table_(w.M + static_cast<std::int64_t>(j));
      if (std::abs(out[j]) > bound_ * (1 + 1e-12))
        throw HypothesisError("weight sequence exceeds its declared bound at n = " +
                              std::to_string(w.M + static_cast<std::int64_t>(j)));
    }
    return out;
  }
  dynsys::PolynomialOrbit orbit(*map_, IntPolynomial{0, 1}, base_, BigInt(w.M), BigInt(w.N - 1));
  std::vector<TorusPoint> pts;
  std::vector<double> re(kBlock), im(kBlock);
  for (std::size_t start = 0; start < len; start += kBlock) {
    const std::size_t count = std::min(kBlock, len - start);
    pts.clear();
    for (std::size_t j = 0; j < count; ++j) {
      pts.push_back(orbit.current());
      orbit.advance();
    }
    g_->eval_batch(pts.data(), count, re.data(), im.data());
    for (std::size_t j = 0; j < count; ++j) out[start + j] = {re[j], im[j]};
  }
  return out;
}

Complex weighted_average(const AverageSpec& spec, const WeightSequence& u, const TorusPoint& x) {
  if (spec.polys.size() != 1) throw ConfigError("weighted averages take a single factor");
  Split s = product_split(spec, x);
  auto w = u.values(spec.window);
  std::vector<double> wr(w.size()), wi(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    wr[j] = w[j].real();
    wi[j] = w[j].imag();
  }
  kernels::active().complex_mul_inplace(s.re.data(), s.im.data(), wr.data(), wi.data(), w.size());
  return mean_of(s);
}

VdcReport vdc_numeric_bound(const VectorSequence& v, const std::vector<double>& weights, std::int64_t H,
                            const Window& window) {
  if (H < 1) throw ConfigError("H must be at least 1");
  if (window.N <= window.M) throw ConfigError("window must satisfy N > M");
  const auto len = static_cast<std::size_t>(window.length());
  std::vector<std::vector<Complex>> vals;
  for (std::int64_t n = window.M; n < window.N + H; ++n) {
    vals.push_back(v(n));
    if (vals.back().size() != weights.size()) throw ConfigError("vector length does not match the weights");
  }
  VdcReport r;
  for (std::int64_t h = 1; h <= H; ++h) {
    Complex acc = 0;
    for (std::size_t n = 0; n < len; ++n) {
      const auto& a = vals[n + static_cast<std::size_t>(h)];
      const auto& b = vals[n];
      Complex dot = 0;
      for (std::size_t j = 0; j < weights.size(); ++j) dot += weights[j] * a[j] * std::conj(b[j]);
      acc += dot;
    }
    r.b.push_back(std::abs(acc) / static_cast<double>(len));
  }
  r.bound = std::accumulate(r.b.begin(), r.b.end(), 0.0) / static_cast<double>(H);
  return r;
}

}  // namespace petlab::averages
