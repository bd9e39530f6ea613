#include "petlab/seminorms.hpp"

#include <gmp.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "petlab/kernels.hpp"

namespace petlab::seminorms {

std::string to_string(CubeAverageResult::Method m) {
  return m == CubeAverageResult::Method::kRecursive ? "recursive" : "brute-force";
}

std::int64_t shift_period(const FiniteSystem& sys, std::size_t map) {
  if (map >= sys.arity()) throw ConfigError("map index out of range");
  std::int64_t p = 1;
  for (std::size_t i = 0; i < sys.moduli().size(); ++i) {
    const std::int64_t n = sys.moduli()[i];
    p = std::lcm(p, n / std::gcd(n, sys.shifts()[map][i]));
  }
  return p;
}

namespace {

double root_of(double power, int k) {
  return std::pow(std::max(power, 0.0), 1.0 / static_cast<double>(std::uint64_t{1} << k));
}

// Orbit structure of one shift: shift[j * |X| + x] is the index of x + j a.
struct Cube {
  std::size_t X = 0;
  std::int64_t P = 1;
  int k = 1;
  std::vector<std::size_t> shift;

  std::size_t at(std::int64_t j, std::size_t x) const { return shift[static_cast<std::size_t>(j) * X + x]; }
};

Cube make_cube(const FiniteSystem& sys, std::size_t map, int k, bool enumerate_cube) {
  if (k < 1 || k > 8) throw ConfigError("seminorm level must be between 1 and 8");
  Cube c;
  c.X = sys.size();
  c.P = shift_period(sys, map);
  c.k = k;
  if (enumerate_cube) {
    long double work = static_cast<long double>(c.X) * std::pow(static_cast<long double>(c.P), k);
    if (work > static_cast<long double>(kOracleCap))
      throw CapacityError("cube enumeration of " + std::to_string(c.X) + " points and period " + std::to_string(c.P) +
                          " at level " + std::to_string(k) + " exceeds the oracle cap");
  } else if (static_cast<std::uint64_t>(c.X) * static_cast<std::uint64_t>(c.P) > kOracleCap) {
    throw CapacityError("orbit table exceeds the oracle cap");
  }
  c.shift.resize(c.X * static_cast<std::size_t>(c.P));
  for (std::size_t x = 0; x < c.X; ++x) {
    std::size_t y = x;
    for (std::int64_t j = 0; j < c.P; ++j) {
      c.shift[static_cast<std::size_t>(j) * c.X + x] = y;
      y = sys.apply(y, map, std::int64_t{1});
    }
  }
  return c;
}

void check_values(const FiniteSystem& sys, const std::vector<Complex>& f) {
  if (f.size() != sys.size())
    throw ConfigError("function has " + std::to_string(f.size()) + " values, the space has " +
                      std::to_string(sys.size()) + " points");
}

// Calls visit(offsets) for every h in [0, P)^k, where offsets[eps] = eps.h mod P.
template <class Visit>
void for_each_h(const Cube& c, Visit visit) {
  const std::size_t vertices = std::size_t{1} << c.k;
  std::vector<std::int64_t> h(static_cast<std::size_t>(c.k), 0);
  std::vector<std::int64_t> off(vertices);
  while (true) {
    for (std::size_t e = 0; e < vertices; ++e) {
      std::int64_t s = 0;
      for (int i = 0; i < c.k; ++i)
        if (e >> i & 1) s += h[static_cast<std::size_t>(i)];
      off[e] = s % c.P;
    }
    visit(off);
    int i = 0;
    while (i < c.k && ++h[static_cast<std::size_t>(i)] == c.P) h[static_cast<std::size_t>(i++)] = 0;
    if (i == c.k) break;
  }
}

Complex cube_sum(const Cube& c, const std::vector<const std::vector<Complex>*>& fs) {
  const std::size_t vertices = std::size_t{1} << c.k;
  std::vector<std::vector<double>> re(vertices, std::vector<double>(c.X)), im(vertices, std::vector<double>(c.X));
  std::vector<const double*> pr(vertices), pi(vertices);
  std::vector<unsigned char> conj(vertices);
  for (std::size_t e = 0; e < vertices; ++e) {
    pr[e] = re[e].data();
    pi[e] = im[e].data();
    conj[e] = static_cast<unsigned char>(__builtin_popcountll(e) & 1);
  }
  const auto& kern = kernels::active();
  double tr = 0, ti = 0;
  for_each_h(c, [&](const std::vector<std::int64_t>& off) {
    for (std::size_t e = 0; e < vertices; ++e) {
      const auto& f = *fs[e];
      for (std::size_t x = 0; x < c.X; ++x) {
        const Complex v = f[c.at(off[e], x)];
        re[e][x] = v.real();
        im[e][x] = v.imag();
      }
    }
    double r, i;
    kern.cube_product_sum(pr.data(), pi.data(), conj.data(), vertices, c.X, &r, &i);
    tr += r;
    ti += i;
  });
  const double count = static_cast<double>(c.X) * std::pow(static_cast<double>(c.P), c.k);
  return {tr / count, ti / count};
}

double power_recursive(const Cube& c, const std::vector<Complex>& f, int k) {
  if (k == 1) {
    double acc = 0;
    for (std::size_t x = 0; x < c.X; ++x) {
      Complex m = 0;
      for (std::int64_t j = 0; j < c.P; ++j) m += f[c.at(j, x)];
      acc += std::norm(m / static_cast<double>(c.P));
    }
    return acc / static_cast<double>(c.X);
  }
  double acc = 0;
  std::vector<Complex> g(c.X);
  for (std::int64_t n = 0; n < c.P; ++n) {
    for (std::size_t x = 0; x < c.X; ++x) g[x] = f[x] * std::conj(f[c.at(n, x)]);
    acc += power_recursive(c, g, k - 1);
  }
  return acc / static_cast<double>(c.P);
}

}  // namespace

CubeAverageResult gowers_seminorm_finite(const FiniteSystem& sys, std::size_t map, const std::vector<Complex>& f,
                                         int k) {
  check_values(sys, f);
  Cube c = make_cube(sys, map, k, true);
  std::vector<const std::vector<Complex>*> fs(std::size_t{1} << k, &f);
  const double power = cube_sum(c, fs).real();
  return {k, root_of(power, k), power, CubeAverageResult::Method::kBruteForce};
}

CubeAverageResult gowers_seminorm_recursive(const FiniteSystem& sys, std::size_t map, const std::vector<Complex>& f,
                                            int k) {
  check_values(sys, f);
  Cube c = make_cube(sys, map, k, true);
  const double power = power_recursive(c, f, k);
  return {k, root_of(power, k), power, CubeAverageResult::Method::kRecursive};
}

Complex cube_integral(const FiniteSystem& sys, std::size_t map, const std::vector<std::vector<Complex>>& fs, int k) {
  if (k < 1 || fs.size() != (std::size_t{1} << k)) throw ConfigError("cube integral needs 2^k functions");
  for (const auto& f : fs) check_values(sys, f);
  Cube c = make_cube(sys, map, k, true);
  std::vector<const std::vector<Complex>*> ptrs;
  for (const auto& f : fs) ptrs.push_back(&f);
  return cube_sum(c, ptrs);
}

DualResult dual_function(const FiniteSystem& sys, std::size_t map, const std::vector<Complex>& f, int k) {
  check_values(sys, f);
  Cube c = make_cube(sys, map, k, true);
  const std::size_t vertices = std::size_t{1} << k;
  DualResult out;
  out.values.assign(c.X, Complex(0));
  for_each_h(c, [&](const std::vector<std::int64_t>& off) {
    for (std::size_t x = 0; x < c.X; ++x) {
      Complex prod = 1;
      for (std::size_t e = 1; e < vertices; ++e) {
        const Complex v = f[c.at(off[e], x)];
        prod *= (__builtin_popcountll(e) & 1) ? std::conj(v) : v;
      }
      out.values[x] += prod;
    }
  });
  const double count = std::pow(static_cast<double>(c.P), k);
  Complex inner = 0;
  for (std::size_t x = 0; x < c.X; ++x) {
    out.values[x] /= count;
    inner += f[x] * out.values[x];
  }
  inner /= static_cast<double>(c.X);
  std::vector<const std::vector<Complex>*> fs(vertices, &f);
  out.identity_residual = std::abs(inner - cube_sum(c, fs));
  return out;
}

// ---------------------------------------------------------------------------
// Torus recursion on trigonometric polynomials

namespace {

using Terms = std::map<std::vector<std::int64_t>, Complex>;

struct TorusContext {
  const AffineMap& t;
  std::int64_t window;
  IntMatrix nil;
  // S^n and the phase offset T^n(0) for n < window
  std::vector<IntMatrix> powers;
  std::vector<std::vector<std::uint64_t>> offsets;
};

bool invariant(const TorusContext& ctx, const std::vector<std::int64_t>& k) {
  const std::size_t m = k.size();
  for (std::size_t j = 0; j < m; ++j) {
    BigInt s = 0;
    for (std::size_t i = 0; i < m; ++i) s += ctx.nil(i, j) * k[i];
    if (s != 0) return false;
  }
  RealConstant dot;
  for (std::size_t i = 0; i < m; ++i)
    if (k[i] != 0) dot += ctx.t.translation()[i].scaled(BigRational(k[i]));
  return dot.is_integer();
}

Complex expi(std::uint64_t phase) {
  double re, im;
  kernels::active().expi(&phase, 1, &re, &im);
  return {re, im};
}

// Terms of f * conj(T^n f).
Terms times_conj_shift(const TorusContext& ctx, const Terms& f, std::int64_t n) {
  const auto& s = ctx.powers[static_cast<std::size_t>(n)];
  const auto& b = ctx.offsets[static_cast<std::size_t>(n)];
  Terms shifted;
  for (const auto& [k, c] : f) {
    std::vector<std::int64_t> kk(k.size());
    std::uint64_t phase = 0;
    for (std::size_t j = 0; j < k.size(); ++j) {
      BigInt v = 0;
      for (std::size_t i = 0; i < k.size(); ++i) v += s(i, j) * k[i];
      if (!v.fits_slong_p()) throw CapacityError("frequency overflow in the seminorm recursion");
      kk[j] = v.get_si();
      phase += static_cast<std::uint64_t>(k[j]) * b[j];
    }
    shifted[kk] += c * expi(phase);
  }
  Terms out;
  for (const auto& [k1, c1] : f) {
    for (const auto& [k2, c2] : shifted) {
      std::vector<std::int64_t> k(k1.size());
      for (std::size_t j = 0; j < k.size(); ++j) k[j] = k1[j] - k2[j];
      out[k] += c1 * std::conj(c2);
    }
  }
  return out;
}

double torus_power(const TorusContext& ctx, const Terms& f, int k) {
  if (k == 1) {
    double acc = 0;
    for (const auto& [freq, c] : f)
      if (invariant(ctx, freq)) acc += std::norm(c);
    return acc;
  }
  double acc = 0;
  for (std::int64_t n = 0; n < ctx.window; ++n) acc += torus_power(ctx, times_conj_shift(ctx, f, n), k - 1);
  return acc / static_cast<double>(ctx.window);
}

}  // namespace

CubeAverageResult gowers_seminorm_torus(const AffineMap& t, const Observable& f, int k, std::int64_t window) {
  if (f.kind() != Observable::Kind::kTrig || f.dim() != t.dim())
    throw ConfigError("torus seminorms take a trigonometric polynomial on the torus of the map");
  if (k < 1 || k > 4) throw ConfigError("torus seminorm level must be between 1 and 4");
  if (window < 1) throw ConfigError("window must be positive");
  TorusContext ctx{t, window, t.matrix() - IntMatrix::identity(t.dim()), {}, {}};
  const auto zero = dynsys::TorusPoint::zero(t.dim(), t.limbs());
  IntMatrix pw = IntMatrix::identity(t.dim());
  for (std::int64_t n = 0; n < window; ++n) {
    ctx.powers.push_back(pw);
    pw = pw * t.matrix();
    auto p = dynsys::affine_power_apply(t, BigInt(n), zero);
    std::vector<std::uint64_t> top;
    for (const auto& c : p.coords) top.push_back(c.top64());
    ctx.offsets.push_back(std::move(top));
  }
  Terms terms;
  for (const auto& term : f.terms()) terms[term.k] += term.c;
  const double power = torus_power(ctx, terms, k);
  return {k, root_of(power, k), power, CubeAverageResult::Method::kRecursive};
}

// ---------------------------------------------------------------------------
// Sequences

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  std::uint64_t z = x + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<double> fill_range(const RealSequence& a, std::int64_t start, std::size_t count) {
  std::vector<double> out(count);
  if (count) a(start, count, out.data());
  return out;
}

}  // namespace

RealSequence random_signs(std::uint64_t seed) {
  return [seed](std::int64_t start, std::size_t count, double* out) {
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint64_t n = static_cast<std::uint64_t>(start) + i;
      out[i] = (splitmix64((seed << 32) + n) & 1) ? 1.0 : -1.0;
    }
  };
}

RealSequence orbit_real_part(const AffineMap& t, const IntPolynomial& p, const dynsys::TorusPoint& x,
                             const Observable& f) {
  if (f.kind() == Observable::Kind::kFinite || f.dim() != t.dim())
    throw ConfigError("observable must live on the torus of the map");
  return [t, p, x, f](std::int64_t start, std::size_t count, double* out) {
    constexpr std::size_t kBlock = 4096;
    dynsys::PolynomialOrbit orbit(t, p, x, BigInt(start), BigInt(start) + static_cast<unsigned long>(count));
    std::vector<dynsys::TorusPoint> pts;
    std::vector<double> im(kBlock);
    for (std::size_t s = 0; s < count; s += kBlock) {
      const std::size_t n = std::min(kBlock, count - s);
      pts.clear();
      for (std::size_t j = 0; j < n; ++j) {
        pts.push_back(orbit.current());
        orbit.advance();
      }
      f.eval_batch(pts.data(), n, out + s, im.data());
    }
  };
}

void IntervalSequence::validate() const {
  if (intervals.empty()) throw ConfigError("interval sequence is empty");
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    if (intervals[i].N <= intervals[i].M) throw ConfigError("intervals must be non-empty");
    if (i && intervals[i].length() <= intervals[i - 1].length())
      throw ConfigError("interval lengths must be strictly increasing");
  }
}

namespace {

// c_h on one interval for every h in [1, H]^k, h_1 varying slowest.
std::vector<double> correlations(const RealSequence& a, const averages::Window& w, int k, std::int64_t H) {
  const auto len = static_cast<std::size_t>(w.length());
  const auto data = fill_range(a, w.M, len + static_cast<std::size_t>(k * H));
  const auto& kern = kernels::active();
  std::vector<double> out;
  std::vector<std::vector<double>> levels(static_cast<std::size_t>(k));
  auto rec = [&](auto&& self, const std::vector<double>& d, int level) -> void {
    for (std::int64_t h = 1; h <= H; ++h) {
      const auto hs = static_cast<std::size_t>(h);
      if (level == k - 1) {
        const double* v[2] = {d.data(), d.data() + hs};
        out.push_back(kern.cube_product_sum_real(v, 2, len) / static_cast<double>(len));
        continue;
      }
      auto& next = levels[static_cast<std::size_t>(level)];
      next.resize(d.size() - hs);
      for (std::size_t n = 0; n < next.size(); ++n) next[n] = d[n] * d[n + hs];
      self(self, next, level + 1);
    }
  };
  rec(rec, data, 0);
  return out;
}

}  // namespace

UniformityReport seq_uniformity_seminorm(const RealSequence& a, const IntervalSequence& I, int k, std::int64_t H,
                                         double tolerance) {
  I.validate();
  if (I.intervals.size() < 2) throw ConfigError("stabilization needs at least two intervals");
  if (k < 1 || k > 4) throw ConfigError("uniformity level must be between 1 and 4");
  if (H < 1) throw ConfigError("H must be at least 1");
  const auto& last = I.intervals.back();
  const auto& prev = I.intervals[I.intervals.size() - 2];
  auto c_last = correlations(a, last, k, H);
  auto c_prev = correlations(a, prev, k, H);
  UniformityReport r;
  r.k = k;
  r.H = H;
  std::vector<std::int64_t> h(static_cast<std::size_t>(k), 1);
  double sum = 0;
  for (std::size_t i = 0; i < c_last.size(); ++i) {
    UniformityRow row{h, c_last[i], std::abs(c_last[i] - c_prev[i])};
    sum += row.c_final;
    r.max_gap = std::max(r.max_gap, row.gap);
    r.table.push_back(std::move(row));
    for (int j = k - 1; j >= 0; --j) {
      if (++h[static_cast<std::size_t>(j)] <= H) break;
      h[static_cast<std::size_t>(j)] = 1;
    }
  }
  r.mean = sum / static_cast<double>(c_last.size());
  r.negative_mean = r.mean < 0;
  r.value = std::pow(std::abs(r.mean), 1.0 / static_cast<double>(std::uint64_t{1} << k));
  r.stabilized = r.max_gap <= tolerance;
  return r;
}

std::vector<double> seq_correlation_test(const RealSequence& a, const RealSequence& u, const IntervalSequence& I) {
  I.validate();
  std::vector<double> out;
  const auto& kern = kernels::active();
  for (const auto& w : I.intervals) {
    const auto len = static_cast<std::size_t>(w.length());
    auto av = fill_range(a, w.M, len);
    auto uv = fill_range(u, w.M, len);
    const double* v[2] = {av.data(), uv.data()};
    out.push_back(kern.cube_product_sum_real(v, 2, len) / static_cast<double>(len));
  }
  return out;
}

}  // namespace petlab::seminorms
