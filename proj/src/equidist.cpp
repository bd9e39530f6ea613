#include "petlab/equidist.hpp"

#include <algorithm>
#include <cmath>

#include "petlab/kernels.hpp"

namespace petlab::equidist {

namespace {

constexpr std::size_t kBlock = 4096;

BigInt ipow(std::int64_t base, unsigned e) {
  BigInt r;
  mpz_pow_ui(r.get_mpz_t(), BigInt(static_cast<long>(base)).get_mpz_t(), e);
  return r;
}

std::string frequency_text(const std::vector<std::int64_t>& k) {
  std::string s = "(";
  for (std::size_t i = 0; i < k.size(); ++i) s += (i ? "," : "") + std::to_string(k[i]);
  return s + ")";
}

}  // namespace

// ---------------------------------------------------------------------------
// RealPolynomial

RealPolynomial::RealPolynomial(std::vector<RealConstant> coeffs) : coeffs_(std::move(coeffs)) {
  while (!coeffs_.empty() && coeffs_.back().is_zero()) coeffs_.pop_back();
}

RealPolynomial RealPolynomial::monomial(const RealConstant& c, unsigned k) {
  std::vector<RealConstant> v(k + 1);
  v[k] = c;
  return RealPolynomial(std::move(v));
}

RealConstant RealPolynomial::coeff(std::size_t k) const { return k < coeffs_.size() ? coeffs_[k] : RealConstant(); }

bool RealPolynomial::divisible_by_power(unsigned k) const {
  for (std::size_t j = 0; j < k && j < coeffs_.size(); ++j)
    if (!coeffs_[j].is_zero()) return false;
  return true;
}

RealPolynomial RealPolynomial::operator-() const {
  std::vector<RealConstant> v;
  for (const auto& c : coeffs_) v.push_back(-c);
  return RealPolynomial(std::move(v));
}

std::string RealPolynomial::to_string(const std::string& var) const {
  if (coeffs_.empty()) return "0";
  std::string s;
  for (std::size_t j = coeffs_.size(); j-- > 0;) {
    if (coeffs_[j].is_zero()) continue;
    if (!s.empty()) s += " + ";
    s += "(" + coeffs_[j].to_string() + ")";
    if (j >= 1) s += "*" + var;
    if (j >= 2) s += "^" + std::to_string(j);
  }
  return s;
}

std::uint64_t required_bits(const RealPolynomial& p, std::int64_t n_bound, unsigned tolerance_bits) {
  // Each rounded coefficient is off by less than one unit, so p(n) is off by
  // less than sum_j |n|^j units over the non-zero coefficients.
  BigInt err = 0;
  for (std::size_t j = 0; j < p.coeffs().size(); ++j)
    if (!p.coeffs()[j].is_zero()) err += ipow(std::max<std::int64_t>(std::abs(n_bound), 1), static_cast<unsigned>(j));
  return bit_length(err) + tolerance_bits;
}

// ---------------------------------------------------------------------------
// Phases and Weyl sums

PhaseStream::PhaseStream(const RealPolynomial& p, std::int64_t start, std::int64_t end, std::size_t limbs,
                         unsigned tolerance_bits) {
  const std::uint64_t need = required_bits(p, std::max(std::abs(start), std::abs(end)), tolerance_bits);
  if (need > 64 * limbs)
    throw PrecisionError("phases of " + p.to_string() + " up to |n| = " +
                             std::to_string(std::max(std::abs(start), std::abs(end))),
                         need, 64 * limbs);
  std::vector<Fixed> c;
  for (const auto& a : p.coeffs()) c.push_back(a.to_fixed(limbs));
  std::vector<Fixed> seeds;
  for (int i = 0; i <= p.degree(); ++i) {
    const std::int64_t n = start + i;
    Fixed v(limbs);
    for (std::size_t j = 0; j < c.size(); ++j) v += c[j].times(ipow(n, static_cast<unsigned>(j)));
    seeds.push_back(v);
  }
  table_ = DifferenceTable(seeds);
}

Complex weyl_average(const RealPolynomial& p, Window w, std::size_t limbs, unsigned tolerance_bits) {
  if (w.N <= w.M) throw ConfigError("window must satisfy N > M");
  const std::int64_t reach = std::max(std::abs(w.M), std::abs(w.N - 1));
  const std::uint64_t need = required_bits(p, reach, tolerance_bits);
  if (need > 64 * limbs)
    throw PrecisionError("phases of " + p.to_string() + " up to |n| = " + std::to_string(reach), need, 64 * limbs);
  const RealPolynomial neg = -p;
  if (neg.to_string() < p.to_string()) return std::conj(weyl_average(neg, w, limbs, tolerance_bits));

  const auto& k = kernels::active();
  PhaseStream stream(p, w.M, w.N - 1, limbs, tolerance_bits);
  const auto len = static_cast<std::size_t>(w.length());
  std::vector<std::uint64_t> ph(kBlock);
  std::vector<double> re(kBlock), im(kBlock), block_re, block_im;
  for (std::size_t start = 0; start < len; start += kBlock) {
    const std::size_t count = std::min(kBlock, len - start);
    for (std::size_t i = 0; i < count; ++i) {
      ph[i] = stream.current();
      stream.advance();
    }
    k.expi(ph.data(), count, re.data(), im.data());
    block_re.push_back(k.sum(re.data(), count));
    block_im.push_back(k.sum(im.data(), count));
  }
  const double n = static_cast<double>(len);
  Complex v(k.sum(block_re.data(), block_re.size()) / n, k.sum(block_im.data(), block_im.size()) / n);
  // A mean of unit vectors; rounding can leave it a few ulps outside the disc.
  const double a = std::abs(v);
  return a > 1.0 ? v / a : v;
}

// ---------------------------------------------------------------------------
// Point sequences

PointSequence polynomial_sequence(std::vector<RealPolynomial> coords, std::int64_t n_end, std::size_t limbs,
                                  unsigned tolerance_bits) {
  const std::size_t m = coords.size();
  // Fail early rather than on the first fill.
  for (const auto& p : coords) PhaseStream(p, 0, std::max<std::int64_t>(n_end - 1, 0), limbs, tolerance_bits);
  struct State {
    std::vector<RealPolynomial> polys;
    std::vector<PhaseStream> streams;
    std::int64_t next = -1;
  };
  auto st = std::make_shared<State>();
  st->polys = std::move(coords);
  PointSequence seq;
  seq.dim = m;
  seq.fill = [st, n_end, limbs, tolerance_bits](std::int64_t start, std::size_t count, std::uint64_t* out) {
    if (start < 0 || start + static_cast<std::int64_t>(count) > n_end)
      throw ConfigError("point sequence requested outside [0, " + std::to_string(n_end) + ")");
    if (start != st->next) {
      st->streams.clear();
      for (const auto& p : st->polys) st->streams.emplace_back(p, start, n_end - 1, limbs, tolerance_bits);
    }
    for (std::size_t j = 0; j < st->streams.size(); ++j) {
      auto& s = st->streams[j];
      for (std::size_t i = 0; i < count; ++i) {
        out[j * count + i] = s.current();
        s.advance();
      }
    }
    st->next = start + static_cast<std::int64_t>(count);
  };
  return seq;
}

PointSequence affine_orbit_sequence(const AffineMap& t, const IntPolynomial& p, const TorusPoint& x,
                                    std::int64_t n_end, unsigned tolerance_bits) {
  dynsys::PolynomialOrbit(t, p, x, BigInt(0), BigInt(static_cast<long>(std::max<std::int64_t>(n_end - 1, 0))),
                          tolerance_bits);
  struct State {
    std::optional<dynsys::PolynomialOrbit> orbit;
    std::int64_t next = -1;
  };
  auto st = std::make_shared<State>();
  PointSequence seq;
  seq.dim = t.dim();
  seq.fill = [st, t, p, x, n_end, tolerance_bits](std::int64_t start, std::size_t count, std::uint64_t* out) {
    if (start < 0 || start + static_cast<std::int64_t>(count) > n_end)
      throw ConfigError("point sequence requested outside [0, " + std::to_string(n_end) + ")");
    if (start != st->next)
      st->orbit.emplace(t, p, x, BigInt(static_cast<long>(start)), BigInt(static_cast<long>(n_end - 1)),
                        tolerance_bits);
    const std::size_t m = t.dim();
    for (std::size_t i = 0; i < count; ++i) {
      const auto& c = st->orbit->current().coords;
      for (std::size_t j = 0; j < m; ++j) out[j * count + i] = c[j].top64();
      st->orbit->advance();
    }
    st->next = start + static_cast<std::int64_t>(count);
  };
  return seq;
}

PointSequence concat(PointSequence a, PointSequence b) {
  PointSequence seq;
  seq.dim = a.dim + b.dim;
  const std::size_t da = a.dim;
  seq.fill = [a = std::move(a), b = std::move(b), da](std::int64_t start, std::size_t count, std::uint64_t* out) {
    if (a.dim > 0) a.fill(start, count, out);
    if (b.dim > 0) b.fill(start, count, out + da * count);
  };
  return seq;
}

// ---------------------------------------------------------------------------
// Truncated Weyl criterion

EquidistVerdict equidist_test(const PointSequence& seq, std::int64_t N, int K, double tol) {
  if (N <= 0) throw ConfigError("equidistribution test needs N > 0");
  if (K < 1) throw ConfigError("frequency cutoff K must be at least 1");
  if (!(tol > 0)) throw ConfigError("tolerance must be positive");
  const std::size_t m = seq.dim;

  EquidistVerdict v;
  v.N = N;
  v.K = K;
  v.tol = tol;

  // Frequencies up to sign, lexicographic in [-K, K]^m.
  std::vector<std::vector<std::int64_t>> freqs;
  std::vector<std::int64_t> k(m, -K);
  while (m > 0) {
    auto first = std::find_if(k.begin(), k.end(), [](std::int64_t c) { return c != 0; });
    if (first != k.end() && *first > 0) freqs.push_back(k);
    std::size_t i = m;
    while (i-- > 0 && k[i] == K) k[i] = -K;
    if (i == static_cast<std::size_t>(-1)) break;
    ++k[i];
  }

  const auto& kt = kernels::active();
  std::vector<std::vector<double>> acc_re(freqs.size()), acc_im(freqs.size());
  std::vector<std::uint64_t> coords(m * kBlock), ph(kBlock);
  std::vector<double> re(kBlock), im(kBlock);
  for (std::int64_t start = 0; start < N && !freqs.empty(); start += static_cast<std::int64_t>(kBlock)) {
    const auto count = static_cast<std::size_t>(std::min<std::int64_t>(kBlock, N - start));
    seq.fill(start, count, coords.data());
    for (std::size_t f = 0; f < freqs.size(); ++f) {
      std::fill(ph.begin(), ph.begin() + static_cast<std::ptrdiff_t>(count), 0);
      for (std::size_t j = 0; j < m; ++j) {
        const auto kj = static_cast<std::uint64_t>(freqs[f][j]);
        if (kj == 0) continue;
        const std::uint64_t* c = coords.data() + j * count;
        for (std::size_t i = 0; i < count; ++i) ph[i] += kj * c[i];
      }
      kt.expi(ph.data(), count, re.data(), im.data());
      acc_re[f].push_back(kt.sum(re.data(), count));
      acc_im[f].push_back(kt.sum(im.data(), count));
    }
  }

  const double n = static_cast<double>(N);
  for (std::size_t f = 0; f < freqs.size(); ++f) {
    const double mag = std::hypot(kt.sum(acc_re[f].data(), acc_re[f].size()) / n,
                                  kt.sum(acc_im[f].data(), acc_im[f].size()) / n);
    if (v.rows.empty() || mag > v.worst) {
      v.worst = mag;
      v.worst_k = freqs[f];
    }
    v.rows.push_back({freqs[f], mag});
  }
  v.pass = v.worst < tol;
  return v;
}

// ---------------------------------------------------------------------------
// Joint sequences (T^{n^d} x, u(n))

std::string to_string(ConditionStatus s) {
  switch (s) {
    case ConditionStatus::kHolds:
      return "holds";
    case ConditionStatus::kViolated:
      return "violated";
    case ConditionStatus::kNotChecked:
      break;
  }
  return "not-checked";
}

ConditionCheck genericity_condition(const AffineMap& t, const std::vector<RealConstant>& x) {
  if (x.size() != t.dim()) throw ConfigError("point dimension does not match the map");
  ConditionCheck c;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!x[j].is_rational()) continue;
    c.status = ConditionStatus::kViolated;
    std::vector<std::int64_t> k2(x.size(), 0);
    k2[j] = x[j].rational_part().get_den().get_si();
    c.witness = "k1 = 0, k2 = " + frequency_text(k2);
    return c;
  }
  // A relation k1.b + k2.x in Q with k2 != 0 exists iff adding x to b lowers
  // the rank of the irrational parts below rank(b) + dim.
  std::vector<RealConstant> all = t.translation();
  const std::size_t rb = dynsys::irrational_rank(all);
  all.insert(all.end(), x.begin(), x.end());
  if (dynsys::irrational_rank(all) < rb + x.size()) {
    c.status = ConditionStatus::kViolated;
    c.witness = "rational relation between the irrational parts of x and b";
  } else {
    c.status = ConditionStatus::kHolds;
  }
  return c;
}

AffinePairReport affine_pair_test(const AffineMap& t, int d, const std::vector<RealPolynomial>& u,
                                  const std::vector<PairSample>& xs, std::int64_t N, int K, double tol) {
  if (d < 1) throw ConfigError("d must be at least 1");
  if (!t.is_ergodic()) throw HypothesisError("the affine map is not ergodic");
  std::vector<RealPolynomial> live;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!u[i].divisible_by_power(static_cast<unsigned>(d + 1)))
      throw HypothesisError("u_" + std::to_string(i + 1) + " = " + u[i].to_string("t") + " is not divisible by t^" +
                            std::to_string(d + 1));
    if (!u[i].is_zero()) live.push_back(u[i]);
  }

  AffinePairReport rep;
  rep.d = d;
  rep.u_dim = live.size();
  if (!live.empty()) {
    rep.u_verdict = equidist_test(polynomial_sequence(live, N, t.limbs()), N, K, tol);
    if (!rep.u_verdict->pass)
      throw HypothesisError("u is not equidistributed at this cutoff: worst frequency " +
                            frequency_text(rep.u_verdict->worst_k) + " with |average| " +
                            std::to_string(rep.u_verdict->worst));
  }

  const IntPolynomial nd = IntPolynomial::monomial(BigInt(1), static_cast<unsigned>(d));
  for (const auto& s : xs) {
    PointSequence seq = affine_orbit_sequence(t, nd, s.x, N);
    if (!live.empty()) seq = concat(std::move(seq), polynomial_sequence(live, N, t.limbs()));
    PairResult r;
    r.verdict = equidist_test(seq, N, K, tol);
    if (s.exact) r.condition = genericity_condition(t, *s.exact);
    rep.all_pass = rep.all_pass && r.verdict.pass;
    rep.results.push_back(std::move(r));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Recurrence scans

std::string to_string(RecurrenceReport::Method m) {
  return m == RecurrenceReport::Method::kExact ? "exact" : "sampled";
}

namespace {

// Disjoint half-open subintervals of [0, 1).
using Arcs = std::vector<std::pair<BigRational, BigRational>>;

// [lo, hi) - t on the circle.
Arcs shifted_arc(const BigRational& lo, const BigRational& hi, const BigRational& t) {
  const BigRational len = hi - lo;
  if (len >= 1) return {{BigRational(0), BigRational(1)}};
  BigRational s = lo - t;
  BigInt fl;
  mpz_fdiv_q(fl.get_mpz_t(), s.get_num_mpz_t(), s.get_den_mpz_t());
  s -= fl;
  const BigRational e = s + len;
  if (e <= 1) return {{s, e}};
  return {{BigRational(0), e - 1}, {s, BigRational(1)}};
}

Arcs intersect(const Arcs& a, const Arcs& b) {
  Arcs out;
  for (const auto& [a0, a1] : a)
    for (const auto& [b0, b1] : b) {
      BigRational lo = std::max(a0, b0), hi = std::min(a1, b1);
      if (lo < hi) out.emplace_back(std::move(lo), std::move(hi));
    }
  return out;
}

BigRational total(const Arcs& a) {
  BigRational s = 0;
  for (const auto& [lo, hi] : a) s += hi - lo;
  return s;
}

IntPolynomial dilate(const IntPolynomial& p, std::int64_t r) {
  std::vector<BigInt> c;
  for (std::size_t j = 0; j < p.coeffs().size(); ++j) c.push_back(p.coeffs()[j] * ipow(r, static_cast<unsigned>(j)));
  return IntPolynomial(std::move(c));
}

struct Scan {
  std::vector<double> measures;
  std::vector<BigRational> exact;
};

Scan scan_exact(const RecurrenceSpec& spec, const std::vector<IntPolynomial>& polys) {
  const std::size_t m = spec.A.dim();
  const auto& box = spec.A.intervals();
  const auto origin = TorusPoint::zero(m, spec.maps.front().limbs());
  std::vector<dynsys::PolynomialOrbit> orbits;
  for (std::size_t i = 0; i < polys.size(); ++i)
    orbits.emplace_back(spec.maps[i], polys[i], origin, BigInt(0), BigInt(static_cast<long>(spec.n_max)));
  Scan s;
  for (std::int64_t n = 0; n <= spec.n_max; ++n) {
    BigRational mu = 1;
    for (std::size_t c = 0; c < m && mu != 0; ++c) {
      Arcs cur{{box[c].lo, box[c].hi}};
      for (auto& o : orbits) cur = intersect(cur, shifted_arc(box[c].lo, box[c].hi, o.current().coords[c].to_rational()));
      mu *= total(cur);
    }
    for (auto& o : orbits) o.advance();
    s.measures.push_back(mu.get_d());
    s.exact.push_back(std::move(mu));
  }
  return s;
}

Scan scan_sampled(const RecurrenceSpec& spec, const std::vector<IntPolynomial>& polys) {
  const std::size_t m = spec.A.dim();
  auto pts = dynsys::sample_measure(m, dynsys::SamplingScheme::random(spec.seed, spec.samples),
                                    spec.maps.front().limbs());
  const auto len = static_cast<std::size_t>(spec.n_max + 1);
  std::vector<double> acc(len, 0.0);
  std::vector<char> alive(len);
  for (const auto& [x, w] : pts) {
    if (spec.A.eval(x).real() == 0) continue;
    std::fill(alive.begin(), alive.end(), 1);
    for (std::size_t i = 0; i < polys.size(); ++i) {
      dynsys::PolynomialOrbit o(spec.maps[i], polys[i], x, BigInt(0), BigInt(static_cast<long>(spec.n_max)));
      for (std::size_t n = 0; n < len; ++n) {
        if (alive[n] && spec.A.eval(o.current()).real() == 0) alive[n] = 0;
        o.advance();
      }
    }
    for (std::size_t n = 0; n < len; ++n)
      if (alive[n]) acc[n] += w;
  }
  return {acc, {}};
}

}  // namespace

RecurrenceReport recurrence_set(const RecurrenceSpec& spec) {
  if (spec.maps.empty()) throw ConfigError("recurrence scan needs at least one map");
  if (spec.polys.size() != spec.maps.size())
    throw ConfigError(std::to_string(spec.polys.size()) + " polynomials for " + std::to_string(spec.maps.size()) +
                      " maps");
  if (spec.A.kind() != Observable::Kind::kBox) throw ConfigError("the set A must be a box");
  for (const auto& t : spec.maps)
    if (t.dim() != spec.A.dim()) throw ConfigError("box dimension does not match the maps");
  if (spec.n_max < 0) throw ConfigError("n_max must be non-negative");
  if (spec.r_cap < 1) throw ConfigError("r_cap must be at least 1");
  if (spec.epsilon < 0) throw ConfigError("epsilon must be non-negative");
  for (std::size_t i = 0; i < spec.polys.size(); ++i)
    if (spec.polys[i].coeff(0) != 0)
      throw HypothesisError("p_" + std::to_string(i + 1) + " = " + spec.polys[i].to_string() +
                            " has a non-zero constant term");
  auto cc = dynsys::commute_check(spec.maps);
  if (!cc.commute)
    throw HypothesisError("maps " + std::to_string(cc.first) + " and " + std::to_string(cc.second) +
                          " do not commute: " + cc.witness);

  RecurrenceReport rep;
  rep.n_max = spec.n_max;
  const bool exact = std::all_of(spec.maps.begin(), spec.maps.end(), [](const AffineMap& t) { return t.is_rotation(); });
  rep.method = exact ? RecurrenceReport::Method::kExact : RecurrenceReport::Method::kSampled;

  BigRational mu_a = spec.A.box_measure();
  BigRational power = 1;
  for (std::size_t i = 0; i <= spec.maps.size(); ++i) power *= mu_a;
  rep.threshold = power - spec.epsilon;

  for (std::size_t i = 0; i + 1 < spec.polys.size(); ++i) {
    const auto& next = spec.polys[i + 1];
    for (int j = 0; j <= spec.polys[i].degree(); ++j)
      if (next.coeff(static_cast<std::size_t>(j)) != 0) rep.in_proven_scope = false;
  }

  Scan best;
  BigRational best_mean = -1;
  for (std::int64_t r = 1; r <= spec.r_cap; ++r) {
    std::vector<IntPolynomial> polys;
    for (const auto& p : spec.polys) polys.push_back(dilate(p, r));
    Scan s = exact ? scan_exact(spec, polys) : scan_sampled(spec, polys);
    BigRational mean = 0;
    if (exact) {
      for (const auto& v : s.exact) mean += v;
    } else {
      for (double v : s.measures) mean += BigRational(v);
    }
    mean /= static_cast<long>(s.measures.size());
    rep.mean_by_r.push_back(mean.get_d());
    if (mean > best_mean) {
      best_mean = mean;
      best = std::move(s);
      rep.r = r;
    }
  }

  rep.measures = best.measures;
  for (std::size_t n = 0; n < best.measures.size(); ++n) {
    const bool ok = exact ? best.exact[n] >= rep.threshold : BigRational(best.measures[n]) >= rep.threshold;
    if (ok) rep.qualifying.push_back(static_cast<std::int64_t>(n));
  }
  for (std::size_t i = 1; i < rep.qualifying.size(); ++i) {
    const std::int64_t g = rep.qualifying[i] - rep.qualifying[i - 1];
    if (!rep.max_gap || g > *rep.max_gap) rep.max_gap = g;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Conditional expectations on a finite space

HolderResult holder_lowerbound_check(std::vector<BigRational> mu,
                                     const std::vector<std::vector<std::size_t>>& partitions,
                                     std::vector<BigRational> f) {
  // mpq_class(a, b) does not reduce, and GMP arithmetic assumes reduced operands
  for (auto& v : mu) v.canonicalize();
  for (auto& v : f) v.canonicalize();
  const std::size_t n = mu.size();
  if (n == 0) throw ConfigError("empty probability space");
  if (f.size() != n) throw ConfigError("f has " + std::to_string(f.size()) + " values for " + std::to_string(n) + " points");
  BigRational total_mass = 0;
  for (const auto& w : mu) {
    if (w < 0) throw ConfigError("negative point mass");
    total_mass += w;
  }
  if (total_mass != 1) throw ConfigError("point masses sum to " + total_mass.get_str() + ", not 1");
  for (std::size_t x = 0; x < n; ++x)
    if (f[x] < 0) throw HypothesisError("f(" + std::to_string(x) + ") = " + f[x].get_str() + " is negative");

  std::vector<BigRational> prod = f;
  for (const auto& cells : partitions) {
    if (cells.size() != n) throw ConfigError("partition does not label every point");
    const std::size_t ncell = cells.empty() ? 0 : *std::max_element(cells.begin(), cells.end()) + 1;
    std::vector<BigRational> mass(ncell, BigRational(0)), integral(ncell, BigRational(0));
    for (std::size_t x = 0; x < n; ++x) {
      mass[cells[x]] += mu[x];
      integral[cells[x]] += mu[x] * f[x];
    }
    // Cells of measure zero get E(f|X) = 0; they do not affect the integral.
    for (std::size_t x = 0; x < n; ++x)
      prod[x] *= mass[cells[x]] == 0 ? BigRational(0) : BigRational(integral[cells[x]] / mass[cells[x]]);
  }

  HolderResult r;
  BigRational mean = 0;
  for (std::size_t x = 0; x < n; ++x) {
    r.lhs += mu[x] * prod[x];
    mean += mu[x] * f[x];
  }
  r.rhs = 1;
  for (std::size_t i = 0; i <= partitions.size(); ++i) r.rhs *= mean;
  r.holds = r.lhs >= r.rhs - BigRational(1, 1000000000000);
  return r;
}

}  // namespace petlab::equidist
