#include "petlab/polynomial.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace petlab {

IntPolynomial::IntPolynomial(std::vector<BigInt> coeffs) : coeffs_(std::move(coeffs)) { normalize(); }

IntPolynomial::IntPolynomial(std::initializer_list<long> coeffs) {
  coeffs_.reserve(coeffs.size());
  for (long c : coeffs) coeffs_.emplace_back(c);
  normalize();
}

IntPolynomial IntPolynomial::constant(const BigInt& c) { return IntPolynomial(std::vector<BigInt>{c}); }

IntPolynomial IntPolynomial::monomial(const BigInt& c, unsigned k) {
  std::vector<BigInt> cs(k + 1);
  cs[k] = c;
  return IntPolynomial(std::move(cs));
}

void IntPolynomial::normalize() {
  while (!coeffs_.empty() && coeffs_.back() == 0) coeffs_.pop_back();
}

BigInt IntPolynomial::coeff(std::size_t k) const { return k < coeffs_.size() ? coeffs_[k] : BigInt(0); }

BigInt IntPolynomial::leading() const { return coeffs_.empty() ? BigInt(0) : coeffs_.back(); }

BigInt IntPolynomial::evaluate(const BigInt& n) const {
  BigInt acc = 0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * n + *it;
  return acc;
}

IntPolynomial IntPolynomial::shifted(const BigInt& h) const {
  if (h == 0 || is_constant()) return *this;
  // Horner in the shifted variable: p(n + h) = (...(c_d (n+h) + c_{d-1})(n+h) ...).
  std::vector<BigInt> out(coeffs_.size());
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
    // out <- out * (n + h) + c
    for (std::size_t k = out.size() - 1; k > 0; --k) out[k] = out[k - 1] + out[k] * h;
    out[0] = out[0] * h + *it;
  }
  return IntPolynomial(std::move(out));
}

IntPolynomial IntPolynomial::operator-() const {
  IntPolynomial r = *this;
  for (auto& c : r.coeffs_) c = -c;
  return r;
}

IntPolynomial& IntPolynomial::operator+=(const IntPolynomial& o) {
  if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size());
  for (std::size_t i = 0; i < o.coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
  normalize();
  return *this;
}

IntPolynomial& IntPolynomial::operator-=(const IntPolynomial& o) {
  if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size());
  for (std::size_t i = 0; i < o.coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
  normalize();
  return *this;
}

IntPolynomial operator*(const IntPolynomial& a, const IntPolynomial& b) {
  if (a.is_zero() || b.is_zero()) return {};
  std::vector<BigInt> out(a.coeffs_.size() + b.coeffs_.size() - 1);
  for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
    for (std::size_t j = 0; j < b.coeffs_.size(); ++j) out[i + j] += a.coeffs_[i] * b.coeffs_[j];
  return IntPolynomial(std::move(out));
}

IntPolynomial IntPolynomial::scaled(const BigInt& c) const {
  IntPolynomial r = *this;
  for (auto& x : r.coeffs_) x *= c;
  r.normalize();
  return r;
}

bool operator<(const IntPolynomial& a, const IntPolynomial& b) {
  if (a.coeffs_.size() != b.coeffs_.size()) return a.coeffs_.size() < b.coeffs_.size();
  for (std::size_t i = a.coeffs_.size(); i-- > 0;) {
    if (a.coeffs_[i] != b.coeffs_[i]) return a.coeffs_[i] < b.coeffs_[i];
  }
  return false;
}

std::string IntPolynomial::to_string(const std::string& var) const {
  if (coeffs_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (std::size_t k = coeffs_.size(); k-- > 0;) {
    const BigInt& c = coeffs_[k];
    if (c == 0) continue;
    BigInt mag = abs(c);
    if (first) {
      if (c < 0) os << "-";
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    if (k == 0 || mag != 1) os << mag.get_str();
    if (k >= 1) os << var;
    if (k >= 2) os << "^" << k;
    first = false;
  }
  return os.str();
}

IntPolynomial IntPolynomial::parse(const std::string& text) {
  std::string s;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  auto fail = [&](const std::string& why) {
    throw ConfigError("cannot parse polynomial '" + text + "': " + why);
  };
  if (s.empty()) fail("empty");
  auto digits = [&](std::size_t& i) {
    const std::size_t b = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    return s.substr(b, i - b);
  };
  IntPolynomial out;
  std::size_t i = 0;
  while (i < s.size()) {
    int sign = 1;
    if (s[i] == '+' || s[i] == '-') {
      sign = s[i] == '-' ? -1 : 1;
      ++i;
    } else if (i > 0) {
      fail("expected + or - at position " + std::to_string(i));
    }
    std::string c = digits(i);
    unsigned k = 0;
    if (i < s.size() && s[i] == '*') {
      if (c.empty()) fail("'*' without a coefficient");
      ++i;
      if (i >= s.size() || s[i] != 'n') fail("expected n after '*'");
    }
    if (i < s.size() && s[i] == 'n') {
      ++i;
      k = 1;
      if (i < s.size() && s[i] == '^') {
        ++i;
        std::string e = digits(i);
        if (e.empty() || e.size() > 4) fail("bad exponent");
        k = static_cast<unsigned>(std::stoul(e));
      }
    } else if (c.empty()) {
      fail("expected a term at position " + std::to_string(i));
    }
    BigInt coef = c.empty() ? BigInt(1) : BigInt(c);
    out += monomial(coef * sign, k);
  }
  return out;
}

IntPolynomial poly_shift(const IntPolynomial& p, const BigInt& h) { return p.shifted(h); }

bool equivalent(const IntPolynomial& p, const IntPolynomial& q) {
  if (p.is_constant() && q.is_constant()) return true;
  return p.degree() == q.degree() && p.leading() == q.leading();
}

}  // namespace petlab
