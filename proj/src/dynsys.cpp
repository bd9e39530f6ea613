#include "petlab/dynsys.hpp"

#include "petlab/kernels.hpp"

#include <gmp.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace petlab::dynsys {

// ---------------------------------------------------------------------------
// TorusPoint, IntMatrix

TorusPoint TorusPoint::zero(std::size_t dim, std::size_t limbs) {
  return TorusPoint(std::vector<Fixed>(dim, Fixed(limbs)));
}

TorusPoint TorusPoint::from_rationals(const std::vector<BigRational>& q, std::size_t limbs) {
  TorusPoint p;
  for (const auto& v : q) p.coords.push_back(Fixed::from_rational(v, limbs));
  return p;
}

IntMatrix::IntMatrix(std::size_t m) : m_(m), a_(m * m, BigInt(0)) {}

IntMatrix::IntMatrix(std::initializer_list<std::initializer_list<long>> rows) : IntMatrix(rows.size()) {
  std::size_t i = 0;
  for (const auto& r : rows) {
    if (r.size() != m_) throw ConfigError("matrix must be square");
    std::size_t j = 0;
    for (long v : r) (*this)(i, j++) = v;
    ++i;
  }
}

IntMatrix IntMatrix::identity(std::size_t m) {
  IntMatrix id(m);
  for (std::size_t i = 0; i < m; ++i) id(i, i) = 1;
  return id;
}

bool IntMatrix::is_zero() const {
  return std::all_of(a_.begin(), a_.end(), [](const BigInt& v) { return v == 0; });
}

bool IntMatrix::is_identity() const { return *this == identity(m_); }

BigInt IntMatrix::determinant() const {
  // Bareiss fraction-free elimination
  if (m_ == 0) return 1;
  std::vector<BigInt> a = a_;
  auto at = [&](std::size_t i, std::size_t j) -> BigInt& { return a[i * m_ + j]; };
  BigInt prev = 1;
  int sign = 1;
  for (std::size_t k = 0; k + 1 < m_; ++k) {
    if (at(k, k) == 0) {
      std::size_t piv = k + 1;
      while (piv < m_ && at(piv, k) == 0) ++piv;
      if (piv == m_) return 0;
      for (std::size_t j = 0; j < m_; ++j) std::swap(at(k, j), at(piv, j));
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < m_; ++i) {
      for (std::size_t j = k + 1; j < m_; ++j) {
        at(i, j) = (at(i, j) * at(k, k) - at(i, k) * at(k, j)) / prev;
      }
    }
    prev = at(k, k);
  }
  return sign * at(m_ - 1, m_ - 1);
}

BigInt IntMatrix::row_norm() const {
  BigInt best = 0;
  for (std::size_t i = 0; i < m_; ++i) {
    BigInt s = 0;
    for (std::size_t j = 0; j < m_; ++j) s += abs((*this)(i, j));
    best = std::max(best, s);
  }
  return best;
}

IntMatrix operator*(const IntMatrix& a, const IntMatrix& b) {
  if (a.m_ != b.m_) throw ConfigError("matrix dimension mismatch");
  IntMatrix c(a.m_);
  for (std::size_t i = 0; i < a.m_; ++i)
    for (std::size_t k = 0; k < a.m_; ++k) {
      if (a(i, k) == 0) continue;
      for (std::size_t j = 0; j < a.m_; ++j) c(i, j) += a(i, k) * b(k, j);
    }
  return c;
}

IntMatrix operator-(const IntMatrix& a, const IntMatrix& b) {
  if (a.m_ != b.m_) throw ConfigError("matrix dimension mismatch");
  IntMatrix c = a;
  for (std::size_t i = 0; i < c.a_.size(); ++i) c.a_[i] -= b.a_[i];
  return c;
}

std::vector<RealConstant> IntMatrix::apply(const std::vector<RealConstant>& v) const {
  std::vector<RealConstant> out(m_);
  for (std::size_t i = 0; i < m_; ++i)
    for (std::size_t j = 0; j < m_; ++j)
      if ((*this)(i, j) != 0) out[i] += v[j].scaled(BigRational((*this)(i, j)));
  return out;
}

std::string IntMatrix::to_string() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < m_; ++i) {
    os << (i ? "," : "") << "[";
    for (std::size_t j = 0; j < m_; ++j) os << (j ? "," : "") << (*this)(i, j).get_str();
    os << "]";
  }
  os << "]";
  return os.str();
}

// ---------------------------------------------------------------------------
// AffineMap

AffineMap::AffineMap(IntMatrix s, std::vector<RealConstant> b, std::size_t limbs)
    : s_(std::move(s)), b_(std::move(b)), limbs_(limbs) {
  const std::size_t m = s_.dim();
  if (m == 0) throw ConfigError("affine map needs dimension >= 1");
  if (b_.size() != m)
    throw ConfigError("translation has " + std::to_string(b_.size()) + " entries, matrix is " + std::to_string(m) +
                      "x" + std::to_string(m));
  BigInt det = s_.determinant();
  if (abs(det) != 1) throw HypothesisError("matrix " + s_.to_string() + " has determinant " + det.get_str());
  IntMatrix nil = s_ - IntMatrix::identity(m);
  IntMatrix pw = IntMatrix::identity(m);
  for (std::size_t k = 0; k < m && !pw.is_zero(); ++k) {
    nil_powers_.push_back(pw);
    pw = pw * nil;
  }
  if (!pw.is_zero()) throw HypothesisError("matrix " + s_.to_string() + " is not unipotent: (S - I)^m != 0");
  for (const auto& c : b_) b_fixed_.push_back(c.to_fixed(limbs_));
}

AffineMap AffineMap::rotation(std::vector<RealConstant> b, std::size_t limbs) {
  std::size_t m = b.size();
  return AffineMap(IntMatrix::identity(m), std::move(b), limbs);
}

bool AffineMap::is_rational_rotation() const {
  return is_rotation() && std::all_of(b_.begin(), b_.end(), [](const RealConstant& c) { return c.is_rational(); });
}

namespace {

}  // namespace

std::size_t irrational_rank(const std::vector<RealConstant>& values) {
  std::vector<unsigned long> keys;
  for (const auto& c : values)
    for (const auto& [k, v] : c.atoms()) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  std::vector<std::vector<BigRational>> rows;
  for (const auto& c : values) {
    std::vector<BigRational> r(keys.size(), BigRational(0));
    for (const auto& [k, v] : c.atoms())
      r[static_cast<std::size_t>(std::lower_bound(keys.begin(), keys.end(), k) - keys.begin())] = v;
    rows.push_back(std::move(r));
  }
  std::size_t rank = 0;
  for (std::size_t col = 0; col < keys.size() && rank < rows.size(); ++col) {
    std::size_t piv = rank;
    while (piv < rows.size() && rows[piv][col] == 0) ++piv;
    if (piv == rows.size()) continue;
    std::swap(rows[piv], rows[rank]);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == rank || rows[i][col] == 0) continue;
      BigRational f = rows[i][col] / rows[rank][col];
      for (std::size_t j = col; j < keys.size(); ++j) rows[i][j] -= f * rows[rank][j];
    }
    ++rank;
  }
  return rank;
}

namespace {

// Basis (over Q) of { k : k N = 0 }, i.e. the null space of N^T.
std::vector<std::vector<BigRational>> left_kernel(const IntMatrix& nil) {
  const std::size_t m = nil.dim();
  std::vector<std::vector<BigRational>> a(m, std::vector<BigRational>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) a[i][j] = nil(j, i);
  std::vector<std::size_t> pivots;
  std::size_t row = 0;
  for (std::size_t col = 0; col < m && row < m; ++col) {
    std::size_t piv = row;
    while (piv < m && a[piv][col] == 0) ++piv;
    if (piv == m) continue;
    std::swap(a[piv], a[row]);
    BigRational lead = a[row][col];
    for (auto& v : a[row]) v /= lead;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == row || a[i][col] == 0) continue;
      BigRational f = a[i][col];
      for (std::size_t j = 0; j < m; ++j) a[i][j] -= f * a[row][j];
    }
    pivots.push_back(col);
    ++row;
  }
  std::vector<std::vector<BigRational>> basis;
  for (std::size_t free = 0; free < m; ++free) {
    if (std::find(pivots.begin(), pivots.end(), free) != pivots.end()) continue;
    std::vector<BigRational> v(m, BigRational(0));
    v[free] = 1;
    for (std::size_t r = 0; r < pivots.size(); ++r) v[pivots[r]] = -a[r][free];
    basis.push_back(std::move(v));
  }
  return basis;
}

}  // namespace

bool AffineMap::is_ergodic() const {
  auto basis = left_kernel(s_ - IntMatrix::identity(dim()));
  std::vector<RealConstant> values;
  for (const auto& k : basis) {
    RealConstant v;
    for (std::size_t j = 0; j < dim(); ++j)
      if (k[j] != 0) v += b_[j].scaled(k[j]);
    values.push_back(std::move(v));
  }
  return irrational_rank(values) == values.size();
}

bool AffineMap::is_ergodic_rotation() const { return is_rotation() && is_ergodic(); }

TorusPoint AffineMap::apply(const TorusPoint& x) const {
  const std::size_t m = dim();
  TorusPoint out = TorusPoint::zero(m, limbs_);
  for (std::size_t i = 0; i < m; ++i) {
    Fixed acc = b_fixed_[i];
    for (std::size_t j = 0; j < m; ++j)
      if (s_(i, j) != 0) acc += x.coords[j].times(s_(i, j));
    out.coords[i] = acc;
  }
  return out;
}

std::uint64_t affine_required_bits(const AffineMap& t, const BigInt& n_bound, unsigned tolerance_bits) {
  // Each rounded translation entry is off by less than one unit; the closed
  // form multiplies it by C(n, k+1) (N^k)_{ij}.
  BigInt err = 0;
  BigInt nb = abs(n_bound);
  const auto& nil = t.nil_powers();
  for (std::size_t k = 0; k < nil.size(); ++k) {
    BigInt pw = 1;
    for (std::size_t e = 0; e <= k; ++e) pw *= nb + static_cast<unsigned long>(k);
    err += pw * nil[k].row_norm();
  }
  return bit_length(err) + tolerance_bits;
}

namespace {

BigInt binomial(const BigInt& n, unsigned long k) {
  BigInt out;
  mpz_bin_ui(out.get_mpz_t(), n.get_mpz_t(), k);
  return out;
}

// Fixed-point N^k v for each k, i.e. the vectors multiplied by the binomials.
std::vector<std::vector<Fixed>> nil_images(const AffineMap& t, const std::vector<Fixed>& v) {
  std::vector<std::vector<Fixed>> out;
  const std::size_t m = t.dim();
  for (const auto& nk : t.nil_powers()) {
    std::vector<Fixed> img(m, Fixed(t.limbs()));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (nk(i, j) != 0) img[i] += v[j].times(nk(i, j));
    out.push_back(std::move(img));
  }
  return out;
}

TorusPoint closed_form(const AffineMap& t, const BigInt& n, const std::vector<std::vector<Fixed>>& nx,
                       const std::vector<std::vector<Fixed>>& nb) {
  const std::size_t m = t.dim();
  TorusPoint out = TorusPoint::zero(m, t.limbs());
  for (std::size_t k = 0; k < nx.size(); ++k) {
    BigInt cx = binomial(n, k);
    BigInt cb = binomial(n, k + 1);
    for (std::size_t i = 0; i < m; ++i) {
      out.coords[i] += nx[k][i].times(cx);
      out.coords[i] += nb[k][i].times(cb);
    }
  }
  return out;
}

void check_point(const AffineMap& t, const TorusPoint& x) {
  if (x.dim() != t.dim()) throw ConfigError("point dimension does not match the map");
  for (const auto& c : x.coords)
    if (c.limbs() != t.limbs()) throw ConfigError("point precision does not match the map");
}

}  // namespace

TorusPoint affine_power_apply(const AffineMap& t, const BigInt& n, const TorusPoint& x, unsigned tolerance_bits) {
  check_point(t, x);
  std::uint64_t need = affine_required_bits(t, n, tolerance_bits);
  if (need > 64 * t.limbs())
    throw PrecisionError("affine_power_apply: n = " + n.get_str() + " exceeds the precision budget", need,
                         64 * t.limbs());
  return closed_form(t, n, nil_images(t, x.coords), nil_images(t, t.translation_fixed()));
}

PolynomialOrbit::PolynomialOrbit(const AffineMap& t, const IntPolynomial& p, const TorusPoint& x, const BigInt& start,
                                 const BigInt& end, unsigned tolerance_bits) {
  check_point(t, x);
  BigInt reach = std::max(abs(start), abs(end));
  BigInt bound = 0;
  for (const auto& c : p.coeffs()) bound += abs(c);
  for (int i = 0; i < p.degree(); ++i) bound *= std::max(reach, BigInt(1));
  std::uint64_t need = affine_required_bits(t, bound, tolerance_bits);
  if (need > 64 * t.limbs())
    throw PrecisionError("polynomial orbit: |p(n)| up to " + bound.get_str() + " exceeds the precision budget", need,
                         64 * t.limbs());

  auto nx = nil_images(t, x.coords);
  auto nb = nil_images(t, t.translation_fixed());
  std::size_t degree = t.nil_powers().size() * static_cast<std::size_t>(std::max(p.degree(), 1));
  std::vector<std::vector<Fixed>> seeds(t.dim());
  for (std::size_t j = 0; j <= degree; ++j) {
    TorusPoint v = closed_form(t, p.evaluate(start + static_cast<unsigned long>(j)), nx, nb);
    for (std::size_t i = 0; i < t.dim(); ++i) seeds[i].push_back(v.coords[i]);
  }
  for (auto& s : seeds) tables_.emplace_back(s);
  current_ = TorusPoint::zero(t.dim(), t.limbs());
  for (std::size_t i = 0; i < tables_.size(); ++i) current_.coords[i] = tables_[i].value();
}

void PolynomialOrbit::advance() {
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    tables_[i].advance();
    current_.coords[i] = tables_[i].value();
  }
}

// ---------------------------------------------------------------------------
// FiniteSystem

namespace {
constexpr std::size_t kMaxFiniteSize = std::size_t{1} << 26;

std::int64_t mod_floor(std::int64_t a, std::int64_t n) {
  std::int64_t r = a % n;
  return r < 0 ? r + n : r;
}
}  // namespace

FiniteSystem::FiniteSystem(std::vector<std::int64_t> moduli, std::vector<std::vector<std::int64_t>> shifts)
    : moduli_(std::move(moduli)), shifts_(std::move(shifts)) {
  if (moduli_.empty()) throw ConfigError("finite system needs at least one modulus");
  for (auto n : moduli_) {
    if (n < 1) throw ConfigError("moduli must be positive");
    if (size_ > kMaxFiniteSize / static_cast<std::size_t>(n)) throw CapacityError("finite system too large");
    size_ *= static_cast<std::size_t>(n);
  }
  for (auto& a : shifts_) {
    if (a.size() != moduli_.size()) throw ConfigError("shift vector length does not match the number of moduli");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = mod_floor(a[i], moduli_[i]);
  }
}

FiniteSystem FiniteSystem::cyclic(std::int64_t n, std::vector<std::int64_t> shifts) {
  std::vector<std::vector<std::int64_t>> s;
  for (auto a : shifts) s.push_back({a});
  return FiniteSystem({n}, std::move(s));
}

std::vector<std::int64_t> FiniteSystem::coords(std::size_t index) const {
  std::vector<std::int64_t> c(moduli_.size());
  for (std::size_t i = moduli_.size(); i-- > 0;) {
    c[i] = static_cast<std::int64_t>(index % static_cast<std::size_t>(moduli_[i]));
    index /= static_cast<std::size_t>(moduli_[i]);
  }
  return c;
}

std::size_t FiniteSystem::index(const std::vector<std::int64_t>& c) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < moduli_.size(); ++i)
    idx = idx * static_cast<std::size_t>(moduli_[i]) + static_cast<std::size_t>(mod_floor(c[i], moduli_[i]));
  return idx;
}

std::size_t FiniteSystem::apply(std::size_t x, std::size_t map, std::int64_t n) const {
  auto c = coords(x);
  const auto& a = shifts_.at(map);
  for (std::size_t i = 0; i < c.size(); ++i) {
    __int128 v = static_cast<__int128>(mod_floor(n, moduli_[i])) * a[i] + c[i];
    c[i] = static_cast<std::int64_t>(v % moduli_[i]);
  }
  return index(c);
}

std::size_t FiniteSystem::apply(std::size_t x, std::size_t map, const BigInt& n) const {
  auto c = coords(x);
  const auto& a = shifts_.at(map);
  for (std::size_t i = 0; i < c.size(); ++i) {
    BigInt r;
    mpz_fdiv_r_ui(r.get_mpz_t(), n.get_mpz_t(), static_cast<unsigned long>(moduli_[i]));
    __int128 v = static_cast<__int128>(r.get_si()) * a[i] + c[i];
    c[i] = static_cast<std::int64_t>(v % moduli_[i]);
  }
  return index(c);
}

std::size_t FiniteSystem::translate(std::size_t x, const std::vector<std::int64_t>& delta) const {
  auto c = coords(x);
  for (std::size_t m = 0; m < delta.size() && m < shifts_.size(); ++m) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      __int128 v = static_cast<__int128>(mod_floor(delta[m], moduli_[i])) * shifts_[m][i] + c[i];
      c[i] = static_cast<std::int64_t>(v % moduli_[i]);
    }
  }
  return index(c);
}

// ---------------------------------------------------------------------------
// Observable

namespace {

Fixed ceil_threshold(const BigRational& q, std::size_t limbs) {
  BigInt num = q.get_num();
  mpz_mul_2exp(num.get_mpz_t(), num.get_mpz_t(), 64 * limbs);
  BigInt c;
  mpz_cdiv_q(c.get_mpz_t(), num.get_mpz_t(), q.get_den_mpz_t());
  return Fixed::from_integer_numerator(c, limbs);
}

}  // namespace

Observable Observable::trig(std::size_t dim, std::vector<TrigTerm> terms) {
  Observable o;
  o.kind_ = Kind::kTrig;
  o.dim_ = dim;
  for (auto& t : terms) {
    if (t.k.size() != dim) throw ConfigError("frequency vector has wrong dimension");
    auto it = std::find_if(o.terms_.begin(), o.terms_.end(), [&](const TrigTerm& u) { return u.k == t.k; });
    if (it != o.terms_.end()) {
      it->c += t.c;
    } else {
      o.terms_.push_back(std::move(t));
    }
  }
  return o;
}

Observable Observable::constant(std::size_t dim, Complex c) {
  return trig(dim, {TrigTerm{std::vector<std::int64_t>(dim, 0), c}});
}

Observable Observable::box(std::vector<Interval> intervals, std::size_t limbs) {
  Observable o;
  o.kind_ = Kind::kBox;
  o.dim_ = intervals.size();
  for (auto& iv : intervals) {
    iv.lo.canonicalize();
    iv.hi.canonicalize();
    if (!(iv.lo >= 0 && iv.lo < iv.hi && iv.hi <= 1))
      throw ConfigError("box interval [" + iv.lo.get_str() + ", " + iv.hi.get_str() + ") must satisfy 0 <= lo < hi <= 1");
    o.lo_fixed_.push_back(ceil_threshold(iv.lo, limbs));
    o.hi_is_one_.push_back(iv.hi == 1);
    o.hi_fixed_.push_back(iv.hi == 1 ? Fixed(limbs) : ceil_threshold(iv.hi, limbs));
  }
  o.intervals_ = std::move(intervals);
  return o;
}

Observable Observable::finite(std::vector<Complex> values) {
  Observable o;
  o.kind_ = Kind::kFinite;
  o.dim_ = 0;
  o.values_ = std::move(values);
  return o;
}

Observable Observable::orbit_average(const Observable& base, std::vector<BigRational> step, std::uint64_t period) {
  if (base.kind_ == Kind::kFinite) throw ConfigError("orbit averages are defined for torus observables");
  if (step.size() != base.dim_) throw ConfigError("orbit step has wrong dimension");
  if (period == 0) throw ConfigError("orbit period must be positive");
  Observable o;
  o.kind_ = Kind::kOrbitAverage;
  o.dim_ = base.dim_;
  o.base_ = std::make_shared<const Observable>(base);
  o.step_ = std::move(step);
  o.period_ = period;
  return o;
}

BigRational Observable::box_measure() const {
  if (kind_ != Kind::kBox) throw ConfigError("box_measure on a non-box observable");
  BigRational m = 1;
  for (const auto& iv : intervals_) m *= iv.hi - iv.lo;
  return m;
}

Complex Observable::mean() const {
  switch (kind_) {
    case Kind::kTrig: {
      Complex s = 0;
      for (const auto& t : terms_)
        if (std::all_of(t.k.begin(), t.k.end(), [](std::int64_t v) { return v == 0; })) s += t.c;
      return s;
    }
    case Kind::kBox:
      return box_measure().get_d();
    case Kind::kFinite: {
      Complex s = 0;
      for (const auto& v : values_) s += v;
      return values_.empty() ? Complex(0) : s / static_cast<double>(values_.size());
    }
    case Kind::kOrbitAverage:
      return base_->mean();
  }
  return 0;
}

double Observable::sup_bound() const {
  switch (kind_) {
    case Kind::kTrig: {
      double s = 0;
      for (const auto& t : terms_) s += std::abs(t.c);
      return s;
    }
    case Kind::kBox:
      return 1.0;
    case Kind::kFinite: {
      double s = 0;
      for (const auto& v : values_) s = std::max(s, std::abs(v));
      return s;
    }
    case Kind::kOrbitAverage:
      return base_->sup_bound();
  }
  return 0;
}

bool Observable::is_real() const {
  switch (kind_) {
    case Kind::kTrig: {
      // real iff c_{-k} = conj(c_k) for every k
      for (const auto& t : terms_) {
        std::vector<std::int64_t> neg(t.k.size());
        std::transform(t.k.begin(), t.k.end(), neg.begin(), [](std::int64_t v) { return -v; });
        auto it = std::find_if(terms_.begin(), terms_.end(), [&](const TrigTerm& u) { return u.k == neg; });
        Complex partner = it == terms_.end() ? Complex(0) : it->c;
        if (std::abs(partner - std::conj(t.c)) > 0) return false;
      }
      return true;
    }
    case Kind::kBox:
      return true;
    case Kind::kFinite:
      return std::all_of(values_.begin(), values_.end(), [](const Complex& v) { return v.imag() == 0; });
    case Kind::kOrbitAverage:
      return base_->is_real();
  }
  return false;
}

Complex Observable::eval(const TorusPoint& x) const {
  if (kind_ == Kind::kFinite) throw ConfigError("finite observable evaluated at a torus point");
  if (x.dim() != dim_) throw ConfigError("observable dimension " + std::to_string(dim_) + " != point dimension " +
                                         std::to_string(x.dim()));
  switch (kind_) {
    case Kind::kTrig: {
      double re = 0, im = 0;
      eval_batch(&x, 1, &re, &im);
      return {re, im};
    }
    case Kind::kBox: {
      for (std::size_t j = 0; j < dim_; ++j) {
        const Fixed& c = x.coords[j];
        if (c.limbs() != lo_fixed_[j].limbs()) {
          BigRational v = c.to_rational();
          if (v < intervals_[j].lo || v >= intervals_[j].hi) return 0.0;
          continue;
        }
        if (c.compare(lo_fixed_[j]) < 0) return 0.0;
        if (!hi_is_one_[j] && c.compare(hi_fixed_[j]) >= 0) return 0.0;
      }
      return 1.0;
    }
    case Kind::kOrbitAverage: {
      std::vector<Fixed> step;
      for (const auto& q : step_) step.push_back(Fixed::from_rational(q, x.coords.front().limbs()));
      TorusPoint y = x;
      Complex s = 0;
      for (std::uint64_t j = 0; j < period_; ++j) {
        s += base_->eval(y);
        for (std::size_t i = 0; i < dim_; ++i) y.coords[i] += step[i];
      }
      return s / static_cast<double>(period_);
    }
    case Kind::kFinite:
      break;
  }
  return 0;
}

void Observable::eval_batch(const TorusPoint* pts, std::size_t n, double* re, double* im) const {
  if (kind_ != Kind::kTrig) {
    for (std::size_t i = 0; i < n; ++i) {
      Complex v = eval(pts[i]);
      re[i] = v.real();
      im[i] = v.imag();
    }
    return;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (pts[i].dim() != dim_) throw ConfigError("observable dimension does not match the point");
  std::fill(re, re + n, 0.0);
  std::fill(im, im + n, 0.0);
  const auto& k = kernels::active();
  std::vector<std::uint64_t> phase(n);
  std::vector<double> er(n), ei(n);
  for (const auto& t : terms_) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t ph = 0;
      for (std::size_t j = 0; j < dim_; ++j) ph += static_cast<std::uint64_t>(t.k[j]) * pts[i].coords[j].top64();
      phase[i] = ph;
    }
    k.expi(phase.data(), n, er.data(), ei.data());
    k.complex_axpy(t.c.real(), t.c.imag(), er.data(), ei.data(), n, re, im);
  }
}

Complex Observable::eval(std::size_t index) const {
  if (kind_ != Kind::kFinite) throw ConfigError("torus observable evaluated at a finite index");
  return values_.at(index);
}

std::string Observable::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::kTrig:
      os << "trig(" << terms_.size() << " terms)";
      break;
    case Kind::kBox:
      os << "box(";
      for (std::size_t j = 0; j < intervals_.size(); ++j)
        os << (j ? "x" : "") << "[" << intervals_[j].lo.get_str() << "," << intervals_[j].hi.get_str() << ")";
      os << ")";
      break;
    case Kind::kFinite:
      os << "finite(" << values_.size() << " values)";
      break;
    case Kind::kOrbitAverage:
      os << "orbit_average(" << base_->describe() << ", period " << period_ << ")";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Commutation and projections

CommuteReport commute_check(const std::vector<AffineMap>& maps) {
  for (std::size_t i = 0; i < maps.size(); ++i) {
    for (std::size_t j = i + 1; j < maps.size(); ++j) {
      const auto& a = maps[i];
      const auto& b = maps[j];
      if (a.dim() != b.dim()) return {false, i, j, "maps act on tori of different dimensions"};
      if (!(a.matrix() * b.matrix() == b.matrix() * a.matrix()))
        return {false, i, j, "S_i S_j != S_j S_i"};
      auto lhs = a.matrix().apply(b.translation());
      auto rhs = b.matrix().apply(a.translation());
      for (std::size_t c = 0; c < a.dim(); ++c) {
        RealConstant diff = lhs[c] + a.translation()[c] - rhs[c] - b.translation()[c];
        if (!diff.is_integer())
          return {false, i, j,
                  "S_i b_j + b_i - S_j b_i - b_j = " + diff.to_string() + " (not 0 mod 1) in coordinate " +
                      std::to_string(c)};
      }
    }
  }
  return {};
}

Observable invariant_expectation(const FiniteSystem& sys, std::size_t map, const BigInt& r, const Observable& f) {
  if (f.kind() != Observable::Kind::kFinite || f.values().size() != sys.size())
    throw ConfigError("observable must be given as values on the finite space");
  if (map >= sys.arity()) throw ConfigError("map index out of range");
  std::vector<Complex> out(sys.size());
  std::vector<bool> seen(sys.size(), false);
  for (std::size_t x = 0; x < sys.size(); ++x) {
    if (seen[x]) continue;
    std::vector<std::size_t> orbit;
    std::size_t y = x;
    do {
      orbit.push_back(y);
      seen[y] = true;
      y = sys.apply(y, map, r);
    } while (y != x);
    Complex s = 0;
    for (auto z : orbit) s += f.eval(z);
    s /= static_cast<double>(orbit.size());
    for (auto z : orbit) out[z] = s;
  }
  return Observable::finite(std::move(out));
}

namespace {

bool annihilates(const std::vector<std::int64_t>& k, const IntMatrix& nil) {
  for (std::size_t j = 0; j < nil.dim(); ++j) {
    BigInt s = 0;
    for (std::size_t i = 0; i < nil.dim(); ++i) s += nil(i, j) * k[i];
    if (s != 0) return false;
  }
  return true;
}

RealConstant dot(const std::vector<std::int64_t>& k, const std::vector<RealConstant>& b) {
  RealConstant s;
  for (std::size_t i = 0; i < k.size(); ++i)
    if (k[i] != 0) s += b[i].scaled(BigRational(k[i]));
  return s;
}

BigInt period_of(const std::vector<BigRational>& step) {
  BigInt l = 1;
  for (const auto& q : step) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q.get_den_mpz_t());
  return l;
}

}  // namespace

Observable invariant_expectation(const AffineMap& t, const BigInt& r, const Observable& f, std::uint64_t period_cap) {
  if (f.dim() != t.dim()) throw ConfigError("observable dimension does not match the map");
  const IntMatrix nil = t.matrix() - IntMatrix::identity(t.dim());
  if (f.kind() == Observable::Kind::kTrig) {
    std::vector<TrigTerm> kept;
    for (const auto& term : f.terms()) {
      if (!annihilates(term.k, nil)) continue;
      if (dot(term.k, t.translation()).scaled(BigRational(r)).is_integer()) kept.push_back(term);
    }
    if (kept.empty()) return Observable::constant(f.dim(), 0.0);
    return Observable::trig(f.dim(), std::move(kept));
  }
  if (f.kind() != Observable::Kind::kBox) throw ConfigError("unsupported observable for an affine map");
  if (t.is_ergodic_rotation()) return Observable::constant(f.dim(), f.mean());
  if (t.is_rational_rotation()) {
    std::vector<BigRational> step;
    for (const auto& c : t.translation()) {
      BigRational s = c.rational_part() * BigRational(r);
      BigInt fl;
      mpz_fdiv_q(fl.get_mpz_t(), s.get_num_mpz_t(), s.get_den_mpz_t());
      s -= fl;
      step.push_back(s);
    }
    BigInt period = period_of(step);
    if (period > period_cap) throw CapacityError("orbit period " + period.get_str() + " exceeds the cap");
    return Observable::orbit_average(f, std::move(step), period.get_ui());
  }
  throw HypothesisError("box observables need an ergodic or a rational rotation");
}

Observable kronecker_rational_expectation(const FiniteSystem& sys, std::size_t map, const Observable& f) {
  if (f.kind() != Observable::Kind::kFinite || f.values().size() != sys.size())
    throw ConfigError("observable must be given as values on the finite space");
  if (map >= sys.arity()) throw ConfigError("map index out of range");
  // T^N is the identity for N the exponent of the group, so K_rat is everything.
  return f;
}

Observable kronecker_rational_expectation(const AffineMap& t, const Observable& f, std::uint64_t r_cap) {
  if (f.dim() != t.dim()) throw ConfigError("observable dimension does not match the map");
  const IntMatrix nil = t.matrix() - IntMatrix::identity(t.dim());
  if (f.kind() == Observable::Kind::kTrig) {
    std::vector<TrigTerm> kept;
    for (const auto& term : f.terms()) {
      if (!annihilates(term.k, nil)) continue;
      RealConstant e = dot(term.k, t.translation());
      if (!e.is_rational()) continue;
      if (e.rational_part().get_den() > r_cap)
        throw CapacityError("rational eigenvalue with denominator " + e.rational_part().get_den().get_str() +
                            " exceeds r_cap");
      kept.push_back(term);
    }
    if (kept.empty()) return Observable::constant(f.dim(), 0.0);
    return Observable::trig(f.dim(), std::move(kept));
  }
  if (f.kind() != Observable::Kind::kBox) throw ConfigError("unsupported observable for an affine map");
  if (t.is_ergodic_rotation()) return Observable::constant(f.dim(), f.mean());
  if (t.is_rational_rotation()) {
    std::vector<BigRational> step;
    for (const auto& c : t.translation()) step.push_back(c.rational_part());
    if (period_of(step) > r_cap) throw CapacityError("rotation period exceeds r_cap");
    return f;
  }
  throw HypothesisError("box observables need an ergodic or a rational rotation");
}

// ---------------------------------------------------------------------------
// Sampling

std::vector<TorusSample> sample_measure(std::size_t dim, const SamplingScheme& scheme, std::size_t limbs) {
  std::vector<TorusSample> out;
  if (scheme.kind == SamplingScheme::Kind::kGrid) {
    if (scheme.resolution == 0) throw ConfigError("grid resolution must be positive");
    std::uint64_t total = 1;
    for (std::size_t d = 0; d < dim; ++d) {
      if (total > (std::uint64_t{1} << 24) / scheme.resolution) throw CapacityError("grid too large");
      total *= scheme.resolution;
    }
    const double w = 1.0 / static_cast<double>(total);
    std::vector<std::uint64_t> idx(dim, 0);
    for (std::uint64_t n = 0; n < total; ++n) {
      std::vector<BigRational> q;
      for (auto v : idx) q.emplace_back(BigInt(v), BigInt(scheme.resolution));
      for (auto& v : q) v.canonicalize();
      out.push_back({TorusPoint::from_rationals(q, limbs), w});
      for (std::size_t d = dim; d-- > 0;) {
        if (++idx[d] < scheme.resolution) break;
        idx[d] = 0;
      }
    }
    return out;
  }
  if (scheme.count == 0) throw ConfigError("random sampling needs a positive count");
  std::mt19937_64 rng(scheme.seed);
  const double w = 1.0 / static_cast<double>(scheme.count);
  for (std::uint64_t n = 0; n < scheme.count; ++n) {
    TorusPoint p = TorusPoint::zero(dim, limbs);
    for (auto& c : p.coords)
      for (std::size_t l = 0; l < limbs; ++l) c.data()[l] = rng();
    out.push_back({std::move(p), w});
  }
  return out;
}

std::vector<std::pair<std::size_t, double>> sample_measure(const FiniteSystem& sys, const SamplingScheme& scheme) {
  std::vector<std::pair<std::size_t, double>> out;
  if (scheme.kind == SamplingScheme::Kind::kGrid) {
    const double w = 1.0 / static_cast<double>(sys.size());
    for (std::size_t x = 0; x < sys.size(); ++x) out.emplace_back(x, w);
    return out;
  }
  if (scheme.count == 0) throw ConfigError("random sampling needs a positive count");
  std::mt19937_64 rng(scheme.seed);
  const double w = 1.0 / static_cast<double>(scheme.count);
  for (std::uint64_t n = 0; n < scheme.count; ++n) {
    auto x = static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * sys.size()) >> 64);
    out.emplace_back(x, w);
  }
  return out;
}

}  // namespace petlab::dynsys
