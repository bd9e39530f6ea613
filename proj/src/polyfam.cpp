#include "petlab/polyfam.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace petlab::polyfam {

// ---------------------------------------------------------------------------
// PolyTuple

bool PolyTuple::is_constant() const noexcept {
  return std::all_of(entries.begin(), entries.end(), [](const IntPolynomial& p) { return p.is_constant(); });
}

int PolyTuple::degree() const noexcept {
  int d = 0;
  for (const auto& p : entries) d = std::max(d, p.degree());
  return d;
}

bool operator<(const PolyTuple& a, const PolyTuple& b) {
  return std::lexicographical_compare(a.entries.begin(), a.entries.end(), b.entries.begin(), b.entries.end());
}

std::string PolyTuple::to_string() const {
  std::string s = "(";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i) s += ", ";
    s += entries[i].to_string();
  }
  return s + ")";
}

// ---------------------------------------------------------------------------
// PolyFamily

PolyFamily::PolyFamily(std::size_t arity, int degree_bound) : arity_(arity), degree_bound_(degree_bound) {}

PolyFamily PolyFamily::from_tuples(std::size_t arity, const std::vector<PolyTuple>& tuples, int degree_bound) {
  if (arity == 0) throw ConfigError("family arity must be at least 1");
  int deg = 0;
  for (std::size_t j = 0; j < tuples.size(); ++j) {
    if (tuples[j].arity() != arity)
      throw ConfigError("tuple " + std::to_string(j) + " has arity " + std::to_string(tuples[j].arity()) +
                        ", expected " + std::to_string(arity));
    if (tuples[j].is_constant())
      throw ConfigError("tuple " + std::to_string(j) + " is all-constant; apply star first");
    deg = std::max(deg, tuples[j].degree());
  }
  if (degree_bound < 0) degree_bound = std::max(deg, 1);
  if (deg > degree_bound)
    throw ConfigError("family degree " + std::to_string(deg) + " exceeds declared bound " + std::to_string(degree_bound));
  return star(arity, tuples, degree_bound);
}

int PolyFamily::degree() const noexcept {
  int d = 0;
  for (const auto& m : members_) d = std::max(d, m.tuple.degree());
  return d;
}

BigInt PolyFamily::size() const {
  BigInt s = 0;
  for (const auto& m : members_) s += m.multiplicity;
  return s;
}

std::optional<std::size_t> PolyFamily::find(const PolyTuple& t) const {
  for (std::size_t j = 0; j < members_.size(); ++j)
    if (members_[j].tuple == t) return j;
  return std::nullopt;
}

std::vector<PolyTuple> PolyFamily::expanded(std::size_t cap) const {
  if (size() > cap) throw CapacityError("family has more than " + std::to_string(cap) + " tuples");
  std::vector<PolyTuple> out;
  for (const auto& m : members_)
    for (unsigned long k = 0; k < m.multiplicity.get_ui(); ++k) out.push_back(m.tuple);
  return out;
}

std::string PolyFamily::to_string() const {
  std::string s = "(";
  for (std::size_t j = 0; j < members_.size(); ++j) {
    if (j) s += ", ";
    s += members_[j].tuple.to_string();
    if (members_[j].multiplicity != 1) s += "x" + members_[j].multiplicity.get_str();
  }
  return s + ")";
}

bool operator==(const PolyFamily& a, const PolyFamily& b) {
  if (a.arity_ != b.arity_ || a.members_.size() != b.members_.size()) return false;
  for (std::size_t j = 0; j < a.members_.size(); ++j) {
    if (a.members_[j].tuple != b.members_[j].tuple || a.members_[j].multiplicity != b.members_[j].multiplicity)
      return false;
  }
  return true;
}

PolyFamily star(std::size_t arity, const std::vector<std::pair<PolyTuple, BigInt>>& raw, int degree_bound) {
  PolyFamily out(arity, degree_bound);
  std::map<PolyTuple, std::size_t> index;
  for (const auto& [t, mult] : raw) {
    if (t.arity() != arity) throw ConfigError("tuple arity mismatch in star");
    if (mult == 0 || t.is_constant()) continue;
    auto [it, inserted] = index.emplace(t, out.members_.size());
    if (inserted) {
      out.members_.push_back({t, mult});
    } else {
      out.members_[it->second].multiplicity += mult;
    }
  }
  return out;
}

PolyFamily star(std::size_t arity, const std::vector<PolyTuple>& raw, int degree_bound) {
  std::vector<std::pair<PolyTuple, BigInt>> tagged;
  tagged.reserve(raw.size());
  for (const auto& t : raw) tagged.emplace_back(t, BigInt(1));
  return star(arity, tagged, degree_bound);
}

// ---------------------------------------------------------------------------
// Prime sets and types

namespace {

// Index of the first non-constant entry of each member (arity if none).
std::size_t leading_row(const PolyTuple& t) {
  for (std::size_t i = 0; i < t.arity(); ++i)
    if (!t[i].is_constant()) return i;
  return t.arity();
}

}  // namespace

std::vector<std::vector<IntPolynomial>> prime_sets(const PolyFamily& f) {
  std::vector<std::vector<IntPolynomial>> sets(f.arity());
  for (const auto& m : f.members()) {
    std::size_t i = leading_row(m.tuple);
    if (i == f.arity()) continue;
    auto& row = sets[i];
    if (std::find(row.begin(), row.end(), m.tuple[i]) == row.end()) row.push_back(m.tuple[i]);
  }
  return sets;
}

TypeMatrix::TypeMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), w_(rows * cols, 0) {}

TypeMatrix::TypeMatrix(std::initializer_list<std::initializer_list<std::uint64_t>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ConfigError("ragged type matrix literal");
    w_.insert(w_.end(), r.begin(), r.end());
  }
}

bool TypeMatrix::is_linear_terminal() const noexcept {
  if (rows_ == 0 || cols_ == 0) return false;
  for (std::size_t k = 0; k < w_.size(); ++k) {
    bool is_w11 = k == cols_ - 1;
    if (!is_w11 && w_[k] != 0) return false;
  }
  return w_[cols_ - 1] != 0;
}

std::string TypeMatrix::to_string() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < rows_; ++i) {
    if (i) os << ",";
    os << "[";
    for (std::size_t j = 0; j < cols_; ++j) os << (j ? "," : "") << at(i, j);
    os << "]";
  }
  os << "]";
  return os.str();
}

TypeMatrix type_matrix(const PolyFamily& f, int d) {
  if (d < 0) d = f.degree_bound();
  if (d < f.degree()) throw ConfigError("type width below family degree");
  TypeMatrix w(f.arity(), static_cast<std::size_t>(d));
  auto sets = prime_sets(f);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    // classes keyed by (degree, leading coefficient)
    std::vector<std::pair<int, BigInt>> classes;
    for (const auto& p : sets[i]) {
      std::pair<int, BigInt> key{p.degree(), p.leading()};
      if (std::find(classes.begin(), classes.end(), key) == classes.end()) classes.push_back(key);
    }
    for (const auto& [deg, lead] : classes) w.at(i, static_cast<std::size_t>(d - deg)) += 1;
  }
  return w;
}

std::strong_ordering type_cmp(const TypeMatrix& a, const TypeMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ConfigError("type_cmp: dimension mismatch " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                      " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  for (std::size_t k = 0; k < a.data().size(); ++k) {
    if (a.data()[k] != b.data()[k]) return a.data()[k] <=> b.data()[k];
  }
  return std::strong_ordering::equal;
}

// ---------------------------------------------------------------------------
// Niceness

NiceReport is_nice(const PolyFamily& f) {
  NiceReport r;
  if (f.empty()) {
    r.violations.push_back({0, 0, 0, "empty family"});
    return r;
  }
  const auto& members = f.members();
  const PolyTuple& first = members.front().tuple;
  const int top = first[0].degree();
  const std::size_t l = f.arity();

  for (std::size_t j = 0; j < members.size(); ++j) {
    const PolyTuple& t = members[j].tuple;
    if (t[0].degree() > top)
      r.violations.push_back({1, 0, j, "deg " + t[0].to_string() + " > deg " + first[0].to_string()});
    for (std::size_t i = 1; i < l; ++i) {
      if (t[i].degree() >= top)
        r.violations.push_back({2, i, j, "deg " + t[i].to_string() + " >= deg " + first[0].to_string()});
    }
  }

  // A repeated first tuple is a j >= 2 member with p11 - p1j = 0.
  if (members.front().multiplicity > 1) r.violations.push_back({3, 0, 0, "first tuple repeated"});
  for (std::size_t j = 1; j < members.size(); ++j) {
    const PolyTuple& t = members[j].tuple;
    int lhs = (first[0] - t[0]).degree();
    bool lhs_zero = (first[0] - t[0]).is_constant();
    if (l == 1) {
      if (lhs_zero) r.violations.push_back({3, 0, j, "p11 - p1j is constant"});
      continue;
    }
    for (std::size_t i = 1; i < l; ++i) {
      int rhs = (first[i] - t[i]).degree();
      if (lhs_zero || lhs <= rhs)
        r.violations.push_back({3, i, j,
                                "deg(" + (first[0] - t[0]).to_string() + ") <= deg(" + (first[i] - t[i]).to_string() +
                                    ")"});
    }
  }
  r.nice = r.violations.empty();
  return r;
}

// ---------------------------------------------------------------------------
// vdC operation

PolyFamily vdc_apply(const PolyFamily& f, const PolyTuple& t, const BigInt& h) {
  if (!f.find(t)) throw HypothesisError("vdc_apply: tuple " + t.to_string() + " is not a member of the family");
  const std::size_t l = f.arity();
  std::vector<std::pair<PolyTuple, BigInt>> raw;
  raw.reserve(2 * f.distinct_size());
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& m : f.members()) {
      std::vector<IntPolynomial> e(l);
      for (std::size_t i = 0; i < l; ++i) e[i] = (pass == 0 ? m.tuple[i].shifted(h) : m.tuple[i]) - t[i];
      raw.emplace_back(PolyTuple(std::move(e)), m.multiplicity);
    }
  }
  return star(l, raw, f.degree_bound());
}

PolyTuple choose_pair(const PolyFamily& f) {
  auto report = is_nice(f);
  if (!report) throw HypothesisError("choose_pair: family is not nice: " + report.violations.front().detail);
  if (f.first()[0].degree() < 2) throw HypothesisError("choose_pair: requires deg p11 >= 2");

  const auto& members = f.members();
  const std::size_t l = f.arity();
  for (std::size_t i = l; i-- > 1;) {
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < members.size(); ++j) {
      if (leading_row(members[j].tuple) != i) continue;
      if (!best || members[j].tuple[i].degree() < members[*best].tuple[i].degree()) best = j;
    }
    if (best) return members[*best].tuple;
  }

  const IntPolynomial& p11 = f.first()[0];
  bool all_equivalent = std::all_of(members.begin(), members.end(),
                                    [&](const PolyFamily::Member& m) { return equivalent(m.tuple[0], p11); });
  if (members.size() == 1 || all_equivalent) return f.first();

  std::optional<std::size_t> best;
  for (std::size_t j = 0; j < members.size(); ++j) {
    if (equivalent(members[j].tuple[0], p11)) continue;
    if (!best || members[j].tuple[0].degree() < members[*best].tuple[0].degree()) best = j;
  }
  return members[*best].tuple;
}

// ---------------------------------------------------------------------------
// Exceptional shifts

namespace {

// Coefficients of n^k in S_h a - b, as polynomials in h.
std::vector<IntPolynomial> shift_coefficient_polys(const IntPolynomial& a, const IntPolynomial& b) {
  int top = std::max(a.degree(), b.degree());
  std::vector<IntPolynomial> out;
  for (int k = 0; k <= top; ++k) {
    std::vector<BigInt> ch(static_cast<std::size_t>(std::max(a.degree() - k, 0)) + 1);
    for (int j = k; j <= a.degree(); ++j) {
      BigInt binom;
      mpz_bin_uiui(binom.get_mpz_t(), static_cast<unsigned long>(j), static_cast<unsigned long>(k));
      ch[static_cast<std::size_t>(j - k)] += a.coeff(static_cast<std::size_t>(j)) * binom;
    }
    ch[0] -= b.coeff(static_cast<std::size_t>(k));
    out.emplace_back(std::move(ch));
  }
  return out;
}

// Every integer root r of a non-zero polynomial satisfies |r| <= bound.
BigInt cauchy_root_bound(const IntPolynomial& c) {
  if (c.is_constant()) return 0;
  BigInt lead = abs(c.leading());
  BigInt best = 0;
  for (int i = 0; i < c.degree(); ++i) {
    BigInt q = abs(c.coeff(static_cast<std::size_t>(i)));
    mpz_cdiv_q(q.get_mpz_t(), q.get_mpz_t(), lead.get_mpz_t());
    best = std::max(best, q);
  }
  return best + 1;
}

}  // namespace

NiceExceptions nice_exceptions(const PolyFamily& f, const PolyTuple& t, const BigInt& h_max) {
  auto report = is_nice(f);
  if (!report) throw HypothesisError("nice_exceptions: family is not nice");
  if (f.first()[0].degree() < 2) throw HypothesisError("nice_exceptions: requires deg p11 >= 2");
  if (!f.find(t)) throw HypothesisError("nice_exceptions: tuple is not a member of the family");

  // Degrees governing the result's niceness are those of S_h p_ij - t_i and
  // S_h p_i1 - p_ij; every other comparison is independent of h.
  std::vector<IntPolynomial> governing;
  const auto& members = f.members();
  const PolyTuple& first = f.first();
  for (const auto& m : members) {
    for (std::size_t i = 0; i < f.arity(); ++i) {
      for (auto& c : shift_coefficient_polys(m.tuple[i], t[i])) governing.push_back(std::move(c));
      for (auto& c : shift_coefficient_polys(first[i], m.tuple[i])) governing.push_back(std::move(c));
    }
  }
  std::sort(governing.begin(), governing.end());
  governing.erase(std::unique(governing.begin(), governing.end()), governing.end());
  std::erase_if(governing, [](const IntPolynomial& c) { return c.is_constant(); });

  NiceExceptions out;
  out.certified_bound = 1;
  for (const auto& c : governing) out.certified_bound = std::max(out.certified_bound, cauchy_root_bound(c));

  auto nice_at = [&](const BigInt& h) { return is_nice(vdc_apply(f, t, h)).nice; };
  out.generic_nice = nice_at(out.certified_bound + 1);
  out.complete = h_max >= out.certified_bound;

  if (!out.generic_nice) {
    if (h_max > (1u << 20)) throw CapacityError("nice_exceptions: generic shift is not nice and h_max is too large");
    for (BigInt h = 1; h <= h_max; ++h)
      if (!nice_at(h)) out.exceptions.push_back(h);
    return out;
  }

  BigInt scan_to = std::min(h_max, out.certified_bound);
  for (BigInt h = 1; h <= scan_to; ++h) {
    bool root = std::any_of(governing.begin(), governing.end(),
                            [&](const IntPolynomial& c) { return c.evaluate(h) == 0; });
    if (root && !nice_at(h)) out.exceptions.push_back(h);
  }
  return out;
}

// ---------------------------------------------------------------------------
// PET traces

std::string to_string(HPolicy p) { return p == HPolicy::kSmallestValid ? "smallest-valid" : "fixed-primes"; }

HPolicy parse_h_policy(const std::string& s) {
  if (s == "smallest-valid") return HPolicy::kSmallestValid;
  if (s == "fixed-primes") return HPolicy::kFixedPrimes;
  throw ConfigError("unknown h policy '" + s + "' (expected smallest-valid or fixed-primes)");
}

namespace {

class PrimeSequence {
 public:
  // 5, 7, 11, 13, ...
  BigInt next() {
    do {
      mpz_nextprime(cur_.get_mpz_t(), cur_.get_mpz_t());
    } while (cur_ < 5);
    return cur_;
  }

 private:
  BigInt cur_ = 4;
};

}  // namespace

PetTrace pet_trace(const PolyFamily& f, HPolicy policy, const TraceLimits& limits) {
  auto report = is_nice(f);
  if (!report) throw HypothesisError("pet_trace: input family is not nice: " + report.violations.front().detail);

  PetTrace trace;
  trace.initial = f;
  trace.initial_type = type_matrix(f);
  PrimeSequence primes;

  PolyFamily cur = f;
  TypeMatrix cur_type = trace.initial_type;
  while (cur.first()[0].degree() >= 2) {
    if (trace.steps.size() >= limits.max_steps) {
      trace.stop_reason = "max_steps";
      return trace;
    }
    PolyTuple t = choose_pair(cur);

    std::optional<PolyFamily> next;
    BigInt h;
    for (std::uint64_t attempt = 0; attempt < limits.max_h_search; ++attempt) {
      h = policy == HPolicy::kSmallestValid ? BigInt(attempt + 1) : primes.next();
      PolyFamily cand = vdc_apply(cur, t, h);
      if (is_nice(cand)) {
        next = std::move(cand);
        break;
      }
    }
    if (!next) throw std::logic_error("pet_trace: no admissible shift within the search limit");

    TypeMatrix next_type = type_matrix(*next);
    if (type_cmp(next_type, cur_type) != std::strong_ordering::less)
      throw std::logic_error("pet_trace: type did not decrease: " + cur_type.to_string() + " -> " +
                             next_type.to_string());

    trace.steps.push_back({std::move(t), h, *next, next_type});
    cur = std::move(*next);
    cur_type = std::move(next_type);
    if (cur.distinct_size() > limits.max_distinct_tuples) {
      trace.stop_reason = "max_distinct_tuples";
      return trace;
    }
  }
  trace.complete = true;
  trace.stop_reason = "degree-1";
  return trace;
}

BigInt trace_k_bound(std::size_t steps, const BigInt& m) {
  BigInt out;
  mpz_mul_2exp(out.get_mpz_t(), m.get_mpz_t(), static_cast<mp_bitcnt_t>(steps));
  return out;
}

// ---------------------------------------------------------------------------
// Universal bound
//
// For a fixed tuple cap, f(., cap) is monotone in W (a smaller W maximises
// over a subset), so the maximum over W' < W is attained at the
// lexicographically largest admissible W' < W. Admissible matrices: row 0 is
// non-empty with leading degree D, rows >= 1 only use degrees below D, and
// the entries sum to at most the tuple cap.

namespace {

struct ChainState {
  int d = 0;
  int l = 0;
  std::vector<BigInt> w;  // row-major, column 0 = top degree
  BigInt m;               // tuple cap is m * 2^e
  BigInt e;

  std::size_t pos(int row, int col) const { return static_cast<std::size_t>(row * d + col); }

  // Column of the leading entry of row 0 (d if row 0 is empty).
  int lead_col() const {
    for (int c = 0; c < d; ++c)
      if (w[pos(0, c)] != 0) return c;
    return d;
  }

  bool terminal() const { return lead_col() == d - 1; }

  bool admissible_slot(std::size_t p, int lead) const {
    int row = static_cast<int>(p) / d;
    int col = static_cast<int>(p) % d;
    return row == 0 || col > lead;
  }
};

}  // namespace

KBound universal_k_bound(int d, int l, std::uint64_t m, std::uint64_t budget) {
  if (d < 1 || l < 1 || m < 1) throw ConfigError("universal_k_bound: d, l, m must be >= 1");
  constexpr unsigned long kMaxCapBits = 1u << 16;

  KBound out;
  out.value = 0;
  ChainState s;
  s.d = d;
  s.l = l;
  s.w.assign(static_cast<std::size_t>(d * l), BigInt(0));
  s.w[0] = m;
  s.m = m;
  s.e = 0;

  while (!s.terminal()) {
    if (out.iterations >= budget) {
      out.exhausted = true;
      return out;
    }
    ++out.iterations;

    // the predecessor is taken under the doubled cap
    s.e += 1;

    bool advanced = false;
    for (std::size_t p = s.w.size(); p-- > 0 && !advanced;) {
      if (s.w[p] == 0) continue;
      std::vector<BigInt> cand(s.w.begin(), s.w.begin() + static_cast<std::ptrdiff_t>(p) + 1);
      cand.resize(s.w.size(), BigInt(0));
      cand[p] -= 1;

      ChainState probe = s;
      probe.w = cand;
      int lead = probe.lead_col();
      std::optional<std::size_t> slot;
      for (std::size_t q = p + 1; q < cand.size(); ++q) {
        if (probe.admissible_slot(q, lead == d ? d : lead)) {
          slot = q;
          break;
        }
      }

      if (!slot) {
        if (lead == d) continue;  // row 0 would be empty
        // Nothing to refill: the chain decrements this entry until it is 1.
        BigInt run = s.w[p] - 1;
        s.w = std::move(cand);
        out.value += 1;
        if (run > 0) {
          s.w[p] -= run;
          s.e += run;
          out.value += run;
        }
        advanced = true;
        break;
      }

      if (s.e > kMaxCapBits) {
        out.exhausted = true;
        return out;
      }
      BigInt cap;
      mpz_mul_2exp(cap.get_mpz_t(), s.m.get_mpz_t(), s.e.get_ui());
      BigInt used = 0;
      for (std::size_t q = 0; q <= p; ++q) used += cand[q];
      BigInt remaining = cap - used;
      if (remaining < 0) continue;
      cand[*slot] = remaining;
      probe.w = cand;
      if (probe.lead_col() == d) continue;
      s.w = std::move(cand);
      out.value += 1;
      advanced = true;
    }
    if (!advanced) throw std::logic_error("universal_k_bound: non-terminal type without predecessor");
  }
  return out;
}

}  // namespace petlab::polyfam
