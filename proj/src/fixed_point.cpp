#include "petlab/fixed_point.hpp"

#include <gmp.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

namespace petlab {

static_assert(sizeof(mp_limb_t) == sizeof(std::uint64_t), "64-bit GMP limbs required");

std::size_t limbs_for_bits(std::uint64_t bits) {
  if (bits == 0 || bits % 64 != 0 || bits > 64 * kMaxLimbs)
    throw ConfigError("precision bits must be a positive multiple of 64 not above " + std::to_string(64 * kMaxLimbs) +
                      ", got " + std::to_string(bits));
  return static_cast<std::size_t>(bits / 64);
}

std::uint64_t bit_length(const BigInt& v) {
  if (v == 0) return 0;
  return mpz_sizeinbase(v.get_mpz_t(), 2);
}

// ---------------------------------------------------------------------------
// Fixed

namespace {

mp_limb_t* limbs_of(std::uint64_t* p) { return reinterpret_cast<mp_limb_t*>(p); }
const mp_limb_t* limbs_of(const std::uint64_t* p) { return reinterpret_cast<const mp_limb_t*>(p); }

}  // namespace

Fixed::Fixed(std::size_t limbs) : n_(limbs) {
  if (limbs == 0 || limbs > kMaxLimbs) throw ConfigError("fixed-point limb count out of range");
}

Fixed Fixed::from_integer_numerator(const BigInt& v, std::size_t limbs) {
  Fixed out(limbs);
  BigInt r;
  mpz_fdiv_r_2exp(r.get_mpz_t(), v.get_mpz_t(), 64 * limbs);
  std::size_t count = 0;
  mpz_export(out.w_.data(), &count, -1, sizeof(std::uint64_t), 0, 0, r.get_mpz_t());
  return out;
}

Fixed Fixed::from_rational(const BigRational& q, std::size_t limbs) {
  BigInt num = q.get_num();
  mpz_mul_2exp(num.get_mpz_t(), num.get_mpz_t(), 64 * limbs);
  BigInt fl;
  mpz_fdiv_q(fl.get_mpz_t(), num.get_mpz_t(), q.get_den_mpz_t());
  return from_integer_numerator(fl, limbs);
}

double Fixed::to_double() const noexcept {
  double v = std::ldexp(static_cast<double>(w_[n_ - 1]), -64);
  if (n_ >= 2) v += std::ldexp(static_cast<double>(w_[n_ - 2]), -128);
  return v;
}

BigInt Fixed::numerator() const {
  BigInt v;
  mpz_import(v.get_mpz_t(), n_, -1, sizeof(std::uint64_t), 0, 0, w_.data());
  return v;
}

BigRational Fixed::to_rational() const {
  BigInt den = 1;
  mpz_mul_2exp(den.get_mpz_t(), den.get_mpz_t(), bits());
  BigRational q(numerator(), den);
  q.canonicalize();
  return q;
}

Fixed& Fixed::operator+=(const Fixed& o) {
  mpn_add_n(limbs_of(w_.data()), limbs_of(w_.data()), limbs_of(o.w_.data()), static_cast<mp_size_t>(n_));
  return *this;
}

Fixed& Fixed::operator-=(const Fixed& o) {
  mpn_sub_n(limbs_of(w_.data()), limbs_of(w_.data()), limbs_of(o.w_.data()), static_cast<mp_size_t>(n_));
  return *this;
}

Fixed Fixed::operator-() const {
  Fixed out(n_);
  mpn_sub_n(limbs_of(out.w_.data()), limbs_of(out.w_.data()), limbs_of(w_.data()), static_cast<mp_size_t>(n_));
  return out;
}

Fixed Fixed::times(std::int64_t k) const {
  Fixed out(n_);
  std::uint64_t mag = k < 0 ? 0 - static_cast<std::uint64_t>(k) : static_cast<std::uint64_t>(k);
  mpn_mul_1(limbs_of(out.w_.data()), limbs_of(w_.data()), static_cast<mp_size_t>(n_), mag);
  return k < 0 ? -out : out;
}

Fixed Fixed::times(const BigInt& k) const {
  if (mpz_fits_slong_p(k.get_mpz_t())) return times(static_cast<std::int64_t>(k.get_si()));
  // |k| mod 2^B, multiplied limb-wise; only the low B bits of the product matter.
  BigInt mag = abs(k);
  mpz_fdiv_r_2exp(mag.get_mpz_t(), mag.get_mpz_t(), bits());
  std::array<std::uint64_t, kMaxLimbs> kl{};
  std::size_t count = 0;
  mpz_export(kl.data(), &count, -1, sizeof(std::uint64_t), 0, 0, mag.get_mpz_t());
  Fixed out(n_);
  if (count == 0) return out;
  std::array<std::uint64_t, 2 * kMaxLimbs> prod{};
  mpn_mul(limbs_of(prod.data()), limbs_of(w_.data()), static_cast<mp_size_t>(n_), limbs_of(kl.data()),
          static_cast<mp_size_t>(count));
  std::copy_n(prod.begin(), n_, out.w_.begin());
  return k < 0 ? -out : out;
}

void Fixed::add_times(const Fixed& o, std::int64_t k) {
  if (k >= 0) {
    mpn_addmul_1(limbs_of(w_.data()), limbs_of(o.w_.data()), static_cast<mp_size_t>(n_), static_cast<mp_limb_t>(k));
  } else {
    mpn_submul_1(limbs_of(w_.data()), limbs_of(o.w_.data()), static_cast<mp_size_t>(n_),
                 0 - static_cast<mp_limb_t>(k));
  }
}

bool Fixed::operator==(const Fixed& o) const noexcept {
  return n_ == o.n_ && std::equal(w_.begin(), w_.begin() + static_cast<std::ptrdiff_t>(n_), o.w_.begin());
}

int Fixed::compare(const Fixed& o) const noexcept {
  return mpn_cmp(limbs_of(w_.data()), limbs_of(o.w_.data()), static_cast<mp_size_t>(n_));
}

std::string Fixed::to_hex() const {
  std::string s = "0x";
  char buf[17];
  for (std::size_t i = n_; i-- > 0;) {
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(w_[i]));
    s += buf;
  }
  return s;
}

// ---------------------------------------------------------------------------
// RealConstant

namespace {

// k = s^2 * r with r squarefree; returns {s, r}.
std::pair<unsigned long, unsigned long> squarefree_split(unsigned long k) {
  unsigned long s = 1, r = 1;
  for (unsigned long p = 2; p * p <= k; ++p) {
    int e = 0;
    while (k % p == 0) {
      k /= p;
      ++e;
    }
    for (int i = 0; i < e / 2; ++i) s *= p;
    if (e % 2) r *= p;
  }
  r *= k;
  return {s, r};
}

// floor(c * sqrt(k) * 2^bits) for k >= 2 squarefree, c rational.
BigInt scaled_sqrt_floor(unsigned long k, const BigRational& c, unsigned long bits) {
  BigInt u = abs(c.get_num());
  BigInt t = u * u * k;
  mpz_mul_2exp(t.get_mpz_t(), t.get_mpz_t(), 2 * bits);
  BigInt root;
  mpz_sqrt(root.get_mpz_t(), t.get_mpz_t());  // floor(|u| sqrt(k) 2^bits), never exact
  BigInt out;
  if (c > 0) {
    mpz_fdiv_q(out.get_mpz_t(), root.get_mpz_t(), c.get_den_mpz_t());
  } else {
    // floor(-x) = -floor(x) - 1 for non-integer x
    mpz_fdiv_q(out.get_mpz_t(), root.get_mpz_t(), c.get_den_mpz_t());
    out = -out - 1;
  }
  return out;
}

}  // namespace

RealConstant::RealConstant(const BigRational& q) : q0_(q) { q0_.canonicalize(); }

RealConstant RealConstant::sqrt(unsigned long k, const BigRational& coeff) {
  auto [s, r] = squarefree_split(k);
  RealConstant out;
  if (k == 0) return out;
  BigRational c = coeff * BigRational(s);
  c.canonicalize();
  if (r == 1) {
    out.q0_ = c;
  } else {
    out.atoms_[r] = c;
  }
  out.prune();
  return out;
}

void RealConstant::prune() {
  q0_.canonicalize();
  for (auto it = atoms_.begin(); it != atoms_.end();) {
    it->second.canonicalize();
    it = it->second == 0 ? atoms_.erase(it) : std::next(it);
  }
}

bool RealConstant::is_integer() const { return is_rational() && q0_.get_den() == 1; }

RealConstant& RealConstant::operator+=(const RealConstant& o) {
  q0_ += o.q0_;
  for (const auto& [k, c] : o.atoms_) atoms_[k] += c;
  prune();
  return *this;
}

RealConstant& RealConstant::operator-=(const RealConstant& o) { return *this += -o; }

RealConstant RealConstant::operator-() const {
  RealConstant r = *this;
  r.q0_ = -r.q0_;
  for (auto& [k, c] : r.atoms_) c = -c;
  return r;
}

RealConstant RealConstant::scaled(const BigRational& c) const {
  RealConstant r = *this;
  r.q0_ *= c;
  for (auto& [k, v] : r.atoms_) v *= c;
  r.prune();
  return r;
}

RealConstant operator*(const RealConstant& a, const RealConstant& b) {
  RealConstant out = b.scaled(a.q0_);
  for (const auto& [ka, ca] : a.atoms_) {
    out += RealConstant::sqrt(ka, b.q0_ * ca);
    for (const auto& [kb, cb] : b.atoms_) out += RealConstant::sqrt(ka * kb, ca * cb);
  }
  return out;
}

bool RealConstant::operator==(const RealConstant& o) const { return q0_ == o.q0_ && atoms_ == o.atoms_; }

Fixed RealConstant::to_fixed(std::size_t limbs) const {
  constexpr unsigned long kGuard = 64;
  const unsigned long bits = 64 * limbs + kGuard;
  BigInt acc = q0_.get_num();
  mpz_mul_2exp(acc.get_mpz_t(), acc.get_mpz_t(), bits);
  mpz_fdiv_q(acc.get_mpz_t(), acc.get_mpz_t(), q0_.get_den_mpz_t());
  for (const auto& [k, c] : atoms_) acc += scaled_sqrt_floor(k, c, bits);
  mpz_fdiv_q_2exp(acc.get_mpz_t(), acc.get_mpz_t(), kGuard);
  return Fixed::from_integer_numerator(acc, limbs);
}

double RealConstant::to_double() const {
  double v = q0_.get_d();
  for (const auto& [k, c] : atoms_) v += c.get_d() * std::sqrt(static_cast<double>(k));
  return v;
}

std::string RealConstant::to_string() const {
  std::string s;
  auto term = [&](const BigRational& c, const std::string& body) {
    BigRational mag = abs(c);
    bool neg = c < 0;
    if (s.empty()) {
      if (neg) s += "-";
    } else {
      s += neg ? " - " : " + ";
    }
    if (body.empty()) {
      s += mag.get_str();
    } else {
      if (mag.get_num() != 1) s += mag.get_num().get_str() + "*";
      s += body;
      if (mag.get_den() != 1) s += "/" + mag.get_den().get_str();
    }
  };
  if (q0_ != 0 || atoms_.empty()) term(q0_, "");
  for (const auto& [k, c] : atoms_) term(c, "sqrt(" + std::to_string(k) + ")");
  return s;
}

namespace {

class ConstantParser {
 public:
  explicit ConstantParser(const std::string& text) : s_(text) {}

  RealConstant parse() {
    skip();
    RealConstant acc;
    bool first = true;
    while (true) {
      skip();
      int sign = 1;
      if (peek() == '+' || peek() == '-') {
        sign = get() == '-' ? -1 : 1;
      } else if (!first) {
        break;
      }
      RealConstant t = term();
      acc += sign < 0 ? -t : t;
      first = false;
      skip();
      if (pos_ >= s_.size()) break;
      if (peek() != '+' && peek() != '-') fail("unexpected character");
    }
    if (pos_ != s_.size()) fail("trailing input");
    return acc;
  }

 private:
  RealConstant term() {
    RealConstant t = factor();
    while (true) {
      skip();
      if (peek() == '*') {
        get();
        t = t * factor();
      } else if (peek() == '/') {
        get();
        skip();
        BigInt d = integer();
        if (d == 0) fail("division by zero");
        t = t.scaled(BigRational(1, 1) / BigRational(d));
      } else {
        return t;
      }
    }
  }

  RealConstant factor() {
    skip();
    if (s_.compare(pos_, 4, "sqrt") == 0) {
      pos_ += 4;
      skip();
      expect('(');
      skip();
      BigInt k = integer();
      skip();
      expect(')');
      if (k < 0 || !mpz_fits_ulong_p(k.get_mpz_t())) fail("sqrt argument out of range");
      return RealConstant::sqrt(k.get_ui());
    }
    if (peek() == '(') {
      get();
      std::size_t start = pos_;
      int depth = 1;
      while (pos_ < s_.size() && depth > 0) {
        char c = get();
        if (c == '(') ++depth;
        if (c == ')') --depth;
      }
      if (depth) fail("unbalanced parenthesis");
      return ConstantParser(s_.substr(start, pos_ - start - 1)).parse();
    }
    return RealConstant(BigRational(integer()));
  }

  BigInt integer() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == '.' || s_[pos_] == 'e' || s_[pos_] == 'E'))
      fail("decimal literal; irrational constants must be declared symbolically (e.g. sqrt(2)-1)");
    if (start == pos_) fail("expected an integer");
    return BigInt(s_.substr(start, pos_ - start));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  char get() { return s_[pos_++]; }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    get();
  }
  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError("cannot parse constant '" + s_ + "' at position " + std::to_string(pos_) + ": " + why);
  }

  std::string s_;
  std::size_t pos_ = 0;
};

}  // namespace

RealConstant RealConstant::parse(const std::string& text) {
  if (text.empty()) throw ConfigError("empty constant");
  return ConstantParser(text).parse();
}

// ---------------------------------------------------------------------------
// DifferenceTable

DifferenceTable::DifferenceTable(const std::vector<Fixed>& initial_values) : diffs_(initial_values) {
  // In place: diffs_[i] becomes the i-th forward difference at the first point.
  for (std::size_t i = 1; i < diffs_.size(); ++i)
    for (std::size_t j = diffs_.size() - 1; j >= i; --j) diffs_[j] -= diffs_[j - 1];
}

void DifferenceTable::advance() {
  for (std::size_t i = 0; i + 1 < diffs_.size(); ++i) diffs_[i] += diffs_[i + 1];
}

}  // namespace petlab
