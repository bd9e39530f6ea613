#include <doctest.h>

#include <map>
#include <random>

#include "petlab/polyfam.hpp"

using namespace petlab;
using namespace petlab::polyfam;

namespace {

IntPolynomial mono(long c, unsigned k) { return IntPolynomial::monomial(c, k); }
const IntPolynomial kZero{};

// Literal evaluation of f(W, m) = 1 + max_{W' < W} f(W', 2m) over every
// admissible matrix, for tiny parameters only.
struct KBoundOracle {
  int d, l;
  std::map<std::pair<std::vector<int>, long>, long> memo;

  int lead(const std::vector<int>& w) const {
    for (int c = 0; c < d; ++c)
      if (w[c]) return c;
    return d;
  }
  bool admissible(const std::vector<int>& w, long cap) const {
    long total = 0;
    for (int x : w) total += x;
    int ld = lead(w);
    if (ld == d || total > cap) return false;
    for (int r = 1; r < l; ++r)
      for (int c = 0; c <= ld; ++c)
        if (w[r * d + c]) return false;
    return true;
  }
  long f(const std::vector<int>& w, long m) {
    if (lead(w) == d - 1) return 0;
    auto key = std::make_pair(w, m);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    long best = -1;
    std::vector<int> cand(w.size(), 0);
    long cap = 2 * m;
    // odometer over all matrices with entries <= cap
    while (true) {
      if (cand < w && admissible(cand, cap)) best = std::max(best, f(cand, cap));
      std::size_t i = cand.size();
      while (i > 0) {
        --i;
        if (cand[i] < cap) {
          ++cand[i];
          break;
        }
        cand[i] = 0;
        if (i == 0) goto done;
      }
    }
  done:
    REQUIRE(best >= 0);
    return memo[key] = best + 1;
  }
};

PolyFamily two_row_family() {
  return PolyFamily::from_tuples(2,
                                 {{mono(1, 2), mono(1, 4)},
                                  {IntPolynomial{0, 1, 1}, mono(1, 1)},
                                  {mono(2, 2), mono(2, 1)},
                                  {kZero, mono(1, 3)},
                                  {kZero, mono(1, 1)}},
                                 4);
}

PolyFamily three_row_family() {
  return PolyFamily::from_tuples(3,
                                 {{mono(1, 2), mono(1, 4), mono(1, 4)},
                                  {IntPolynomial{0, 1, 1}, mono(3, 3), kZero},
                                  {mono(2, 2), kZero, mono(2, 1)},
                                  {mono(1, 1), mono(2, 1), kZero},
                                  {kZero, mono(1, 3), mono(1, 4)},
                                  {kZero, mono(2, 3), mono(1, 2)},
                                  {kZero, kZero, mono(1, 3)},
                                  {kZero, kZero, IntPolynomial{1, 0, 0, 1}}},
                                 4);
}

PolyFamily cubic_square() { return PolyFamily::from_tuples(2, {{mono(1, 3), kZero}, {kZero, mono(1, 2)}}); }

}  // namespace

TEST_CASE("star removes constant tuples and keeps order") {
  auto f = star(2, std::vector<PolyTuple>{{mono(1, 1), kZero}, {kZero, kZero}}, 1);
  CHECK(f.distinct_size() == 1);
  CHECK(f.first() == PolyTuple{mono(1, 1), kZero});

  IntPolynomial sq3{9, 6, 1};  // (n+3)^2
  auto g = star(2,
                std::vector<PolyTuple>{{sq3, mono(-1, 1)},
                                       {kZero, IntPolynomial{3}},
                                       {mono(1, 2), mono(-1, 1)},
                                       {kZero, kZero}},
                2);
  REQUIRE(g.distinct_size() == 2);
  CHECK(g.members()[0].tuple == PolyTuple{sq3, mono(-1, 1)});
  CHECK(g.members()[1].tuple == PolyTuple{mono(1, 2), mono(-1, 1)});

  CHECK(star(1, std::vector<PolyTuple>{{IntPolynomial{4}}}, 1).empty());
  CHECK_THROWS_AS(PolyFamily::from_tuples(1, {{IntPolynomial{4}}}), ConfigError);
}

TEST_CASE("prime sets") {
  auto p = prime_sets(cubic_square());
  CHECK(p[0] == std::vector<IntPolynomial>{mono(1, 3)});
  CHECK(p[1] == std::vector<IntPolynomial>{mono(1, 2)});

  auto q = prime_sets(three_row_family());
  CHECK(q[0] == std::vector<IntPolynomial>{mono(1, 2), IntPolynomial{0, 1, 1}, mono(2, 2), mono(1, 1)});
  CHECK(q[1] == std::vector<IntPolynomial>{mono(1, 3), mono(2, 3)});
  CHECK(q[2] == std::vector<IntPolynomial>{mono(1, 3), IntPolynomial{1, 0, 0, 1}});

  auto r = prime_sets(PolyFamily::from_tuples(2, {{mono(1, 1), kZero}}));
  CHECK(r[0].size() == 1);
  CHECK(r[1].empty());
}

TEST_CASE("type matrices of reference families") {
  CHECK(type_matrix(two_row_family()) == TypeMatrix{{0, 0, 2, 0}, {0, 1, 0, 1}});
  CHECK(type_matrix(three_row_family()) == TypeMatrix{{0, 0, 2, 1}, {0, 2, 0, 0}, {0, 1, 0, 0}});
  CHECK(type_matrix(cubic_square(), 3) == TypeMatrix{{1, 0, 0}, {0, 1, 0}});
}

TEST_CASE("type order") {
  CHECK(type_cmp(TypeMatrix{{2, 2}, {0, 0}}, TypeMatrix{{2, 1}, {9, 9}}) == std::strong_ordering::greater);
  TypeMatrix w{{1, 0}, {3, 4}};
  CHECK(type_cmp(w, w) == std::strong_ordering::equal);
  CHECK(type_cmp(TypeMatrix{{0, 0}, {0, 1}}, TypeMatrix{{0, 0}, {0, 0}}) == std::strong_ordering::greater);
  CHECK_THROWS_AS(type_cmp(TypeMatrix(2, 2), TypeMatrix(2, 3)), ConfigError);
  CHECK(TypeMatrix{{0, 3}, {0, 0}}.is_linear_terminal());
  CHECK_FALSE(TypeMatrix{{0, 3}, {0, 1}}.is_linear_terminal());
}

TEST_CASE("niceness") {
  CHECK(is_nice(cubic_square()).nice);
  auto bad = is_nice(PolyFamily::from_tuples(2, {{mono(1, 1), kZero}, {kZero, mono(1, 1)}}));
  CHECK_FALSE(bad.nice);
  REQUIRE_FALSE(bad.violations.empty());
  CHECK(bad.violations.front().condition == 2);
  CHECK(is_nice(PolyFamily::from_tuples(2, {{mono(1, 2), kZero}, {mono(1, 1), mono(1, 1)}})).nice);

  // condition (3): the leading difference must dominate the other rows
  auto c3 = is_nice(PolyFamily::from_tuples(2, {{mono(1, 2), mono(1, 1)}, {IntPolynomial{0, 0, 1} + IntPolynomial{5}, kZero}}));
  CHECK_FALSE(c3.nice);
  CHECK(c3.violations.front().condition == 3);
  // l = 1: equal leading entries are not allowed
  CHECK_FALSE(is_nice(PolyFamily::from_tuples(1, {{mono(1, 2)}, {IntPolynomial{1, 0, 1}}})).nice);
  CHECK(is_nice(PolyFamily::from_tuples(1, {{mono(1, 2)}, {IntPolynomial{1, 1, 1}}})).nice);
}

TEST_CASE("vdC operation") {
  auto f = cubic_square();
  PolyTuple t{kZero, mono(1, 2)};
  BigInt h = 4;
  auto g = vdc_apply(f, t, h);
  REQUIRE(g.distinct_size() == 3);
  CHECK(g.members()[0].tuple == PolyTuple{mono(1, 3).shifted(h), mono(-1, 2)});
  CHECK(g.members()[1].tuple == PolyTuple{kZero, IntPolynomial{16, 8}});
  CHECK(g.members()[2].tuple == PolyTuple{mono(1, 3), mono(-1, 2)});
  for (long hh : {1, 2, 3, 17, 1000}) CHECK(type_matrix(vdc_apply(f, t, hh), 3) == TypeMatrix{{1, 0, 0}, {0, 0, 1}});

  auto lin = PolyFamily::from_tuples(2, {{mono(1, 1), kZero}});
  CHECK(vdc_apply(lin, lin.first(), 0).empty());
  CHECK_THROWS_AS(vdc_apply(f, PolyTuple{mono(1, 1), kZero}, 1), HypothesisError);
}

TEST_CASE("reduction tuple choice") {
  CHECK(choose_pair(cubic_square()) == PolyTuple{kZero, mono(1, 2)});
  auto single = PolyFamily::from_tuples(2, {{mono(1, 2), kZero}});
  CHECK(choose_pair(single) == single.first());
  auto same = PolyFamily::from_tuples(2, {{mono(1, 2), kZero}, {IntPolynomial{0, 1, 1}, kZero}});
  CHECK(choose_pair(same) == same.first());
  auto mixed = PolyFamily::from_tuples(1, {{mono(1, 3)}, {mono(2, 2)}, {mono(1, 1)}});
  CHECK(choose_pair(mixed) == PolyTuple{mono(1, 1)});
  // the literal member is returned, constant partner included
  auto partner = PolyFamily::from_tuples(2, {{mono(1, 3), kZero}, {IntPolynomial{5}, mono(1, 2)}, {kZero, mono(1, 1)}});
  CHECK(choose_pair(partner) == PolyTuple{kZero, mono(1, 1)});
  CHECK_THROWS_AS(choose_pair(PolyFamily::from_tuples(1, {{mono(1, 1)}})), HypothesisError);
}

TEST_CASE("exceptional shifts") {
  auto f = cubic_square();
  auto ex = nice_exceptions(f, choose_pair(f), 100);
  CHECK(ex.exceptions.empty());
  CHECK(ex.generic_nice);
  for (long h = 1; h <= 100; ++h) CHECK(is_nice(vdc_apply(f, choose_pair(f), h)).nice);

  // (n^2 + 2n, n^2) with the first tuple: S_h(n^2) - n^2 - 2n has degree 0 at h = 1.
  auto g = PolyFamily::from_tuples(1, {{IntPolynomial{0, 2, 1}}, {mono(1, 2)}});
  auto t = choose_pair(g);
  auto eg = nice_exceptions(g, t, 50);
  CHECK(eg.complete);
  for (long h = 1; h <= 50; ++h) {
    bool listed = std::find(eg.exceptions.begin(), eg.exceptions.end(), BigInt(h)) != eg.exceptions.end();
    CHECK(listed == !is_nice(vdc_apply(g, t, h)).nice);
  }
  CHECK(eg.exceptions.size() <= 1);
  CHECK_THROWS_AS(nice_exceptions(PolyFamily::from_tuples(1, {{mono(1, 1)}}), PolyTuple{mono(1, 1)}, 10),
                  HypothesisError);
}

TEST_CASE("PET traces") {
  auto walk = PolyFamily::from_tuples(2, {{mono(1, 2), kZero}, {kZero, mono(1, 1)}});
  auto tr = pet_trace(walk, HPolicy::kSmallestValid);
  CHECK(tr.complete);
  CHECK(tr.steps.size() == 2);
  CHECK(tr.final_type().is_linear_terminal());
  CHECK(trace_k_bound(tr) == 8);

  TraceLimits three;
  three.max_steps = 3;
  auto cs = pet_trace(cubic_square(), HPolicy::kFixedPrimes, three);
  REQUIRE(cs.steps.size() >= 3);
  CHECK(cs.initial_type == TypeMatrix{{1, 0, 0}, {0, 1, 0}});
  CHECK(cs.steps[0].type == TypeMatrix{{1, 0, 0}, {0, 0, 1}});
  CHECK(cs.steps[1].type == TypeMatrix{{1, 0, 0}, {0, 0, 0}});
  CHECK(cs.steps[2].type == TypeMatrix{{0, 7, 0}, {0, 0, 0}});
  CHECK(cs.steps[0].h == 5);
  CHECK(cs.steps[1].h == 7);
  CHECK(cs.steps[2].h == 11);
  CHECK_FALSE(cs.complete);
  CHECK(cs.stop_reason == "max_steps");

  auto full = pet_trace(cubic_square(), HPolicy::kSmallestValid);
  CHECK(full.complete);
  CHECK(full.final_type().is_linear_terminal());

  auto lin = PolyFamily::from_tuples(2, {{mono(1, 1), kZero}, {mono(2, 1), kZero}});
  auto tl = pet_trace(lin, HPolicy::kSmallestValid);
  CHECK(tl.steps.empty());
  CHECK(tl.complete);
  CHECK(trace_k_bound(0, 5) == 5);
  CHECK(trace_k_bound(6, 1) == 64);

  CHECK_THROWS_AS(pet_trace(PolyFamily::from_tuples(2, {{mono(1, 1), kZero}, {kZero, mono(1, 1)}}),
                            HPolicy::kSmallestValid),
                  HypothesisError);
  CHECK(parse_h_policy("fixed-primes") == HPolicy::kFixedPrimes);
  CHECK_THROWS_AS(parse_h_policy("largest"), ConfigError);
}

TEST_CASE("universal level bound") {
  CHECK(universal_k_bound(1, 3, 5, 10).value == 0);
  CHECK(universal_k_bound(2, 2, 1, 1000).value == 1);
  CHECK(universal_k_bound(4, 3, 8, 5).exhausted);
  CHECK_THROWS_AS(universal_k_bound(0, 1, 1, 10), ConfigError);

  struct Case {
    int d, l;
    long m;
  };
  for (Case c : {Case{2, 1, 1}, Case{2, 2, 1}, Case{2, 1, 2}, Case{3, 1, 1}}) {
    CAPTURE(c.d);
    CAPTURE(c.l);
    CAPTURE(c.m);
    KBoundOracle oracle{c.d, c.l, {}};
    std::vector<int> w(static_cast<std::size_t>(c.d * c.l), 0);
    w[0] = static_cast<int>(c.m);
    auto kb = universal_k_bound(c.d, c.l, static_cast<std::uint64_t>(c.m), 1000);
    REQUIRE_FALSE(kb.exhausted);
    CHECK(kb.value == oracle.f(w, c.m));
  }
  CHECK(universal_k_bound(2, 1, 1, 1000).value == 1);
  CHECK(universal_k_bound(2, 1, 2, 1000).value == 5);
  CHECK(universal_k_bound(3, 1, 1, 1000).value == 6);
  // [3,0] -> [2,4] -> ... -> [2,0] -> [1,191] -> ... -> [1,0] -> [0,*]
  CHECK(universal_k_bound(2, 1, 3, 1000).value == 198);
}

namespace {

IntPolynomial random_poly(std::mt19937_64& rng, int max_deg) {
  IntPolynomial p;
  for (int k = 1; k <= max_deg; ++k) p = p + mono(static_cast<long>(rng() % 7) - 3, static_cast<unsigned>(k));
  return p;
}

// Nice families by rejection: the first entry of every tuple has degree at
// most d and the remaining entries have degree below d.
PolyFamily random_nice_family(std::mt19937_64& rng) {
  for (;;) {
    const std::size_t l = 1 + rng() % 3;
    const int d = 2 + static_cast<int>(rng() % 2);
    const std::size_t m = 1 + rng() % 3;
    std::vector<PolyTuple> tuples;
    for (std::size_t j = 0; j < m; ++j) {
      PolyTuple t;
      t.entries.push_back(random_poly(rng, d));
      for (std::size_t i = 1; i < l; ++i) t.entries.push_back(random_poly(rng, d - 1));
      if (!t.is_constant()) tuples.push_back(std::move(t));
    }
    if (tuples.empty() || tuples[0][0].degree() != d) continue;
    auto f = PolyFamily::from_tuples(l, tuples, d);
    if (is_nice(f)) return f;
  }
}

}  // namespace

TEST_CASE("PET traces on random nice families") {
  std::mt19937_64 rng(31);
  TraceLimits limits;
  limits.max_steps = 40;
  limits.max_distinct_tuples = 2048;
  int completed = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const PolyFamily f = random_nice_family(rng);
    CAPTURE(f.to_string());
    const HPolicy policy = trial % 2 ? HPolicy::kFixedPrimes : HPolicy::kSmallestValid;
    const PetTrace tr = pet_trace(f, policy, limits);

    const PolyFamily* prev = &tr.initial;
    const TypeMatrix* prev_type = &tr.initial_type;
    CHECK(tr.initial_type == type_matrix(f));
    for (const auto& s : tr.steps) {
      REQUIRE(prev->find(s.chosen));
      CHECK(s.result == vdc_apply(*prev, s.chosen, s.h));
      CHECK(is_nice(s.result).nice);
      CHECK(s.type == type_matrix(s.result));
      CHECK(type_cmp(s.type, *prev_type) == std::strong_ordering::less);
      CHECK(s.result.size() <= 2 * prev->size());
      if (policy == HPolicy::kSmallestValid)
        for (long h = 1; h < s.h; ++h) CHECK_FALSE(is_nice(vdc_apply(*prev, s.chosen, h)).nice);
      prev = &s.result;
      prev_type = &s.type;
    }

    if (tr.complete) {
      ++completed;
      CHECK(tr.final_family().first()[0].degree() == 1);
      CHECK(tr.final_type().is_linear_terminal());
      CHECK(trace_k_bound(tr) == tr.initial.size() * (BigInt(1) << tr.steps.size()));
    } else {
      CHECK((tr.stop_reason == "max_steps" || tr.stop_reason == "max_distinct_tuples"));
    }
    // traces are reproducible
    CHECK(pet_trace(f, policy, limits).steps.size() == tr.steps.size());
  }
  CHECK(completed >= 30);
}
