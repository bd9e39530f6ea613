#pragma once

// Exact engine for ordered families of polynomial l-tuples: matrix types,
// niceness, the van der Corput (vdC) operation, reduction-tuple selection,
// PET termination traces and characteristic-factor level bounds.

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "petlab/common.hpp"
#include "petlab/polynomial.hpp"

namespace petlab::polyfam {

struct PolyTuple {
  std::vector<IntPolynomial> entries;

  PolyTuple() = default;
  explicit PolyTuple(std::vector<IntPolynomial> e) : entries(std::move(e)) {}
  PolyTuple(std::initializer_list<IntPolynomial> e) : entries(e) {}

  std::size_t arity() const noexcept { return entries.size(); }
  const IntPolynomial& operator[](std::size_t i) const { return entries[i]; }
  bool is_constant() const noexcept;
  int degree() const noexcept;

  friend bool operator==(const PolyTuple&, const PolyTuple&) = default;
  friend bool operator<(const PolyTuple& a, const PolyTuple& b);
  std::string to_string() const;
};

// Ordered family of polynomial l-tuples with no all-constant tuple.
//
// Identical tuples are stored once with a multiplicity; the position of a
// tuple is the position of its first occurrence. Niceness, types and the vdC
// operation are insensitive to this except through the multiplicity of the
// first tuple, which is tracked.
class PolyFamily {
 public:
  struct Member {
    PolyTuple tuple;
    BigInt multiplicity;
  };

  PolyFamily() = default;
  PolyFamily(std::size_t arity, int degree_bound);

  // Builds a canonical family; throws ConfigError on an all-constant tuple,
  // an arity mismatch or a degree above the bound. A negative bound means
  // "use the family degree".
  static PolyFamily from_tuples(std::size_t arity, const std::vector<PolyTuple>& tuples, int degree_bound = -1);

  std::size_t arity() const noexcept { return arity_; }
  int degree_bound() const noexcept { return degree_bound_; }
  int degree() const noexcept;
  bool empty() const noexcept { return members_.empty(); }
  std::size_t distinct_size() const noexcept { return members_.size(); }
  BigInt size() const;  // counted with multiplicity

  const std::vector<Member>& members() const noexcept { return members_; }
  const PolyTuple& first() const { return members_.front().tuple; }
  std::optional<std::size_t> find(const PolyTuple& t) const;

  // Expanded list (each tuple repeated by its multiplicity); throws
  // CapacityError if that exceeds `cap` tuples.
  std::vector<PolyTuple> expanded(std::size_t cap = 1u << 20) const;

  std::string to_string() const;

  friend bool operator==(const PolyFamily& a, const PolyFamily& b);

 private:
  friend PolyFamily star(std::size_t, const std::vector<std::pair<PolyTuple, BigInt>>&, int);
  std::size_t arity_ = 0;
  int degree_bound_ = 0;
  std::vector<Member> members_;
};

// Removes every all-constant tuple, keeping the order of the rest. An empty
// result is a valid (vacuous) family; check `empty()`.
PolyFamily star(std::size_t arity, const std::vector<PolyTuple>& raw, int degree_bound);
PolyFamily star(std::size_t arity, const std::vector<std::pair<PolyTuple, BigInt>>& raw, int degree_bound);

// Row i lists the distinct non-constant i-th entries of the tuples whose
// earlier entries are all constant, in order of first occurrence.
std::vector<std::vector<IntPolynomial>> prime_sets(const PolyFamily& f);

class TypeMatrix {
 public:
  TypeMatrix() = default;
  TypeMatrix(std::size_t rows, std::size_t cols);
  TypeMatrix(std::initializer_list<std::initializer_list<std::uint64_t>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  // Column 0 is the top degree (cols), column cols-1 is degree 1.
  std::uint64_t at(std::size_t row, std::size_t col) const { return w_[row * cols_ + col]; }
  std::uint64_t& at(std::size_t row, std::size_t col) { return w_[row * cols_ + col]; }
  std::uint64_t count(std::size_t row, int degree) const { return at(row, cols_ - static_cast<std::size_t>(degree)); }
  const std::vector<std::uint64_t>& data() const noexcept { return w_; }

  // Only the degree-1 entry of the first row is non-zero.
  bool is_linear_terminal() const noexcept;

  friend bool operator==(const TypeMatrix&, const TypeMatrix&) = default;
  std::string to_string() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint64_t> w_;
};

// w_{i,j}: number of equivalence classes of degree-j polynomials in the
// i-th prime set. `d` defaults to the family degree bound.
TypeMatrix type_matrix(const PolyFamily& f, int d = -1);

// Lexicographic comparison, row by row, each row from the top degree down.
// Throws ConfigError on mismatched dimensions.
std::strong_ordering type_cmp(const TypeMatrix& a, const TypeMatrix& b);

struct NiceViolation {
  int condition = 0;  // 1, 2 or 3; 0 for an empty family
  std::size_t row = 0;
  std::size_t member = 0;
  std::string detail;
};

struct NiceReport {
  bool nice = false;
  std::vector<NiceViolation> violations;
  explicit operator bool() const noexcept { return nice; }
};

// (1) deg p11 >= deg p1j; (2) deg p11 > deg pij for i >= 2;
// (3) deg(p11 - p1j) > deg(pi1 - pij) for i, j >= 2. For l = 1, (3)
// compares against the zero row, i.e. p11 - p1j must be non-constant.
NiceReport is_nice(const PolyFamily& f);

// (S_h P_1 - p_1, P_1 - p_1, ..., S_h P_l - p_l, P_l - p_l)*.
// Throws HypothesisError if `t` is not a member of `f`.
PolyFamily vdc_apply(const PolyFamily& f, const PolyTuple& t, const BigInt& h);

// Reduction tuple for a nice family of degree >= 2.
PolyTuple choose_pair(const PolyFamily& f);

struct NiceExceptions {
  std::vector<BigInt> exceptions;  // sorted, within [1, h_max]
  BigInt certified_bound;          // no exception lies above this
  bool generic_nice = true;        // verdict for every h above the bound
  bool complete = false;           // h_max >= certified_bound
};

NiceExceptions nice_exceptions(const PolyFamily& f, const PolyTuple& t, const BigInt& h_max);

enum class HPolicy { kSmallestValid, kFixedPrimes };

std::string to_string(HPolicy p);
HPolicy parse_h_policy(const std::string& s);

struct VdcStep {
  PolyTuple chosen;
  BigInt h;
  PolyFamily result;
  TypeMatrix type;
};

struct TraceLimits {
  std::size_t max_steps = 100000;
  std::size_t max_distinct_tuples = 1u << 18;
  std::uint64_t max_h_search = 1u << 20;
};

struct PetTrace {
  PolyFamily initial;
  TypeMatrix initial_type;
  std::vector<VdcStep> steps;
  bool complete = false;
  std::string stop_reason;

  const PolyFamily& final_family() const { return steps.empty() ? initial : steps.back().result; }
  const TypeMatrix& final_type() const { return steps.empty() ? initial_type : steps.back().type; }
};

// Iterates choose_pair + vdc_apply until the family is nice of degree 1 or a
// limit is hit (then `complete` is false). Throws HypothesisError on a
// non-nice input.
PetTrace pet_trace(const PolyFamily& f, HPolicy policy, const TraceLimits& limits = {});

// 2^steps * m.
BigInt trace_k_bound(std::size_t steps, const BigInt& m);
inline BigInt trace_k_bound(const PetTrace& t) { return trace_k_bound(t.steps.size(), t.initial.size()); }

struct KBound {
  bool exhausted = false;
  BigInt value;
  std::uint64_t iterations = 0;
};

// Worst-case number of vdC operations f(W, m) over all types W of nice
// families with degree <= d, l rows and at most m tuples, where f(W, m) = 0
// on degree-1 types and f(W, m) = 1 + max_{W' < W} f(W', 2m).
KBound universal_k_bound(int d, int l, std::uint64_t m, std::uint64_t budget);

}  // namespace petlab::polyfam
