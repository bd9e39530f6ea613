#include <doctest.h>

#include <numeric>
#include <random>

#include "petlab/equidist.hpp"

using namespace petlab;
using namespace petlab::equidist;

namespace {

RealConstant rc(const char* s) { return RealConstant::parse(s); }

RealPolynomial poly(std::initializer_list<const char*> c) {
  std::vector<RealConstant> v;
  for (const char* s : c) v.push_back(rc(s));
  return RealPolynomial(std::move(v));
}

Observable interval(const char* lo, const char* hi) {
  return Observable::box({{BigRational(lo), BigRational(hi)}});
}

}  // namespace

TEST_CASE("real polynomials") {
  auto p = poly({"0", "0", "sqrt(3)", "0"});
  CHECK(p.degree() == 2);
  CHECK(p.divisible_by_power(2));
  CHECK_FALSE(p.divisible_by_power(3));
  CHECK(RealPolynomial().divisible_by_power(5));
  CHECK((-p).coeff(2) == -rc("sqrt(3)"));
  CHECK(required_bits(p, 1000, 64) == 64 + 20);
  CHECK_THROWS_AS(PhaseStream(RealPolynomial::monomial(rc("sqrt(2)"), 30), 0, 1 << 30, 4), PrecisionError);
}

TEST_CASE("Weyl sums") {
  CHECK(weyl_average(RealPolynomial(), {0, 1000}) == Complex(1.0, 0.0));
  // alternating signs over an even window: exactly zero
  auto half = weyl_average(poly({"0", "1/2"}), {3, 1003});
  CHECK(half.real() == 0.0);
  CHECK(half.imag() == 0.0);

  // tests/oracles/equidist_oracle.py
  auto w = weyl_average(poly({"0", "0", "sqrt(2)"}), {0, 100000});
  CHECK(w.real() == doctest::Approx(0.001319806209704365).epsilon(1e-9));
  CHECK(w.imag() == doctest::Approx(0.0002253800755486034).epsilon(1e-8));
  CHECK(std::abs(w) < 0.02);
  auto w3 = weyl_average(poly({"0", "0", "0", "sqrt(3)"}), {100, 2100});
  CHECK(w3.real() == doctest::Approx(0.005880124014616752).epsilon(1e-9));
  CHECK(w3.imag() == doctest::Approx(-0.025127027418639238).epsilon(1e-9));

  CHECK_THROWS_AS(weyl_average(poly({"1"}), {5, 5}), ConfigError);
}

TEST_CASE("Weyl sums: bounded and conjugation-symmetric") {
  const char* pool[] = {"0", "1/3", "sqrt(2)", "-sqrt(5)/7", "2*sqrt(3)-1", "-1/4"};
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<RealConstant> c;
    const int deg = 1 + static_cast<int>(rng() % 3);
    for (int j = 0; j <= deg; ++j) c.push_back(rc(pool[rng() % 6]));
    RealPolynomial p(c);
    const std::int64_t M = static_cast<std::int64_t>(rng() % 500) - 250;
    Window w{M, M + 1 + static_cast<std::int64_t>(rng() % 3000)};
    auto a = weyl_average(p, w);
    auto b = weyl_average(-p, w);
    CHECK(std::abs(a) <= 1.0);
    CHECK(b == std::conj(a));
  }
}

TEST_CASE("truncated Weyl criterion") {
  auto rot = polynomial_sequence({poly({"0", "sqrt(2)-1"})}, 1000000);
  auto v = equidist_test(rot, 1000000, 5, 0.01);
  CHECK(v.pass);
  CHECK(v.rows.size() == 5);
  // closed form |sin(pi N k a) / (N sin(pi k a))|, worst at k = 5
  CHECK(v.worst == doctest::Approx(2.5166518179994785e-06).epsilon(1e-6));
  CHECK(v.worst_k == std::vector<std::int64_t>{5});

  auto quarter = equidist_test(polynomial_sequence({poly({"0", "1/4"})}, 1000), 1000, 5, 0.01);
  CHECK_FALSE(quarter.pass);
  CHECK(quarter.worst_k == std::vector<std::int64_t>{4});
  CHECK(quarter.worst == 1.0);

  auto still = equidist_test(polynomial_sequence({poly({"sqrt(7)"})}, 100), 100, 2, 0.5);
  CHECK_FALSE(still.pass);
  CHECK(still.worst == doctest::Approx(1.0));

  // two coordinates: (n/2, n sqrt(2)) fails at (2, 0)
  auto two = equidist_test(polynomial_sequence({poly({"0", "1/2"}), poly({"0", "sqrt(2)"})}, 5000), 5000, 2, 0.05);
  CHECK(two.rows.size() == 12);
  CHECK(two.worst_k == std::vector<std::int64_t>{2, 0});

  CHECK_THROWS_AS(equidist_test(rot, 100, 0, 0.1), ConfigError);
  CHECK_THROWS_AS(equidist_test(rot, 100, 1, 0), ConfigError);
}

TEST_CASE("equidistribution verdicts are monotone in K and tol") {
  auto seq = polynomial_sequence({poly({"0", "sqrt(5)", "1/3"}), poly({"0", "2/7", "0", "sqrt(2)"})}, 20000);
  double prev = 0;
  for (int K = 1; K <= 4; ++K) {
    auto v = equidist_test(seq, 20000, K, 0.05);
    CHECK(v.worst >= prev);
    prev = v.worst;
    // the rows of a smaller cutoff are contained, with identical values
    auto small = equidist_test(seq, 20000, 1, 0.05);
    for (const auto& r : small.rows) {
      auto it = std::find_if(v.rows.begin(), v.rows.end(), [&](const FrequencyRow& q) { return q.k == r.k; });
      REQUIRE(it != v.rows.end());
      CHECK(it->magnitude == r.magnitude);
    }
  }
  auto v = equidist_test(seq, 20000, 3, 0.05);
  for (double tol : {0.001, 0.01, 0.1, 0.5, 1.1}) CHECK(equidist_test(seq, 20000, 3, tol).pass == (v.worst < tol));
}

TEST_CASE("affine pair test") {
  auto t = dynsys::AffineMap::rotation({rc("sqrt(2)-1")});
  auto u = std::vector<RealPolynomial>{poly({"0", "0", "sqrt(3)"})};
  std::vector<PairSample> xs;
  xs.push_back({dynsys::TorusPoint::from_rationals({BigRational(1, 3)}, 4), std::vector<RealConstant>{rc("1/3")}});
  xs.push_back({dynsys::TorusPoint::zero(1, 4), std::vector<RealConstant>{rc("0")}});
  xs.push_back({dynsys::TorusPoint({rc("sqrt(5)-2").to_fixed(4)}), std::vector<RealConstant>{rc("sqrt(5)-2")}});
  xs.push_back({dynsys::TorusPoint({rc("sqrt(2)/3").to_fixed(4)}), std::vector<RealConstant>{rc("sqrt(2)/3")}});
  auto rep = affine_pair_test(t, 1, u, xs, 100000, 3, 0.02);
  CHECK(rep.all_pass);
  REQUIRE(rep.u_verdict);
  CHECK(rep.u_verdict->pass);
  // tests/oracles/equidist_oracle.py: worst (2, 2) at 0.0050325
  CHECK(rep.results[0].verdict.worst == doctest::Approx(0.005032511572101872).epsilon(1e-6));
  CHECK(rep.results[0].verdict.worst_k == std::vector<std::int64_t>{2, 2});
  // rational x always violates the genericity condition, yet passes here
  CHECK(rep.results[0].condition.status == ConditionStatus::kViolated);
  CHECK(rep.results[0].condition.witness == "k1 = 0, k2 = (3)");
  CHECK(rep.results[1].condition.witness == "k1 = 0, k2 = (1)");
  CHECK(rep.results[2].condition.status == ConditionStatus::kHolds);
  // sqrt(2)/3 = (alpha + 1)/3: 3x - b = 1
  CHECK(rep.results[3].condition.status == ConditionStatus::kViolated);

  // resonant coefficient: u = (sqrt(2)-1) n^2 still passes for generic x
  auto res = affine_pair_test(t, 1, {poly({"0", "0", "sqrt(2)-1"})}, {xs[2]}, 100000, 3, 0.02);
  CHECK(res.all_pass);

  // u = 0 degenerates to the test of the orbit alone
  auto alone = affine_pair_test(t, 1, {RealPolynomial()}, {xs[2]}, 50000, 4, 0.02);
  CHECK(alone.u_dim == 0);
  CHECK_FALSE(alone.u_verdict);
  auto direct = equidist_test(affine_orbit_sequence(t, IntPolynomial{0, 1}, xs[2].x, 50000), 50000, 4, 0.02);
  CHECK(alone.results[0].verdict.worst == direct.worst);
  CHECK(alone.results[0].verdict.worst_k == direct.worst_k);

  CHECK_THROWS_AS(affine_pair_test(t, 2, u, xs, 1000, 3, 0.02), HypothesisError);  // t^3 does not divide
  CHECK_THROWS_AS(affine_pair_test(dynsys::AffineMap::rotation({rc("1/5")}), 1, u, xs, 1000, 3, 0.02),
                  HypothesisError);
  CHECK_THROWS_AS(affine_pair_test(t, 1, {poly({"0", "0", "1/2"})}, xs, 1000, 3, 0.02), HypothesisError);

  // skew product T(x, y) = (x + a, y + x), d = 1, u = sqrt(3) n^2 on the second factor
  dynsys::AffineMap skew(dynsys::IntMatrix{{1, 0}, {1, 1}}, {rc("sqrt(2)-1"), rc("0")});
  PairSample p{dynsys::TorusPoint({rc("sqrt(5)-2").to_fixed(4), rc("sqrt(7)-2").to_fixed(4)}), std::nullopt};
  auto sk = affine_pair_test(skew, 1, {poly({"0", "0", "sqrt(3)"})}, {p}, 50000, 2, 0.05);
  CHECK(sk.results[0].condition.status == ConditionStatus::kNotChecked);
  CHECK(sk.results[0].verdict.rows.size() == 62);
}

TEST_CASE("recurrence scans match the brute-force oracle") {
  auto a = dynsys::AffineMap::rotation({rc("sqrt(2)-1")});
  auto b = dynsys::AffineMap::rotation({rc("sqrt(3)-1")});
  RecurrenceSpec spec{{a, b}, {IntPolynomial{0, 1}, IntPolynomial{0, 0, 1}}, interval("0", "3/10"), BigRational(0), 5000};
  auto rep = recurrence_set(spec);
  CHECK(rep.method == RecurrenceReport::Method::kExact);
  CHECK(rep.threshold == BigRational(27, 1000));
  CHECK(rep.in_proven_scope);
  // tests/oracles/equidist_oracle.py
  CHECK(rep.qualifying.size() == 1140);
  CHECK(std::accumulate(rep.qualifying.begin(), rep.qualifying.end(), std::int64_t{0}) == 2830985);
  REQUIRE(rep.max_gap);
  CHECK(*rep.max_gap == 26);
  const std::vector<std::int64_t> head{0, 2, 7, 10, 26, 34, 36, 44, 46, 51, 65, 68, 70, 72, 73, 80, 85, 87, 92, 99};
  CHECK(std::vector<std::int64_t>(rep.qualifying.begin(), rep.qualifying.begin() + 20) == head);
  CHECK(rep.measures[0] == doctest::Approx(0.3));

  spec.epsilon = BigRational(1, 20);
  auto loose = recurrence_set(spec);
  CHECK(loose.qualifying.size() == 5001);
  CHECK(*loose.max_gap == 1);

  RecurrenceSpec one{{a}, {IntPolynomial{0, 1}}, interval("0", "3/10"), BigRational(1, 100), 5000};
  auto r1 = recurrence_set(one);
  CHECK(r1.qualifying.size() == 2201);
  CHECK(std::accumulate(r1.qualifying.begin(), r1.qualifying.end(), std::int64_t{0}) == 5500705);
  CHECK(*r1.max_gap == 3);
  one.epsilon = 0;
  auto r0 = recurrence_set(one);
  CHECK(r0.qualifying.size() == 2100);
  CHECK(std::accumulate(r0.qualifying.begin(), r0.qualifying.end(), std::int64_t{0}) == 5248145);
}

TEST_CASE("recurrence scans: rational rotations, multipliers and hypotheses") {
  auto eighth = dynsys::AffineMap::rotation({rc("1/8")});
  RecurrenceSpec spec{{eighth, eighth}, {IntPolynomial{0, 1}, IntPolynomial{0, 0, 1}}, interval("0", "1/4"),
                      BigRational(0), 40};
  spec.r_cap = 8;
  auto rep = recurrence_set(spec);
  // only r = 8 returns A to itself at every n
  CHECK(rep.r == 8);
  CHECK(rep.mean_by_r.size() == 8);
  CHECK(rep.mean_by_r[7] == 0.25);
  for (std::size_t r = 0; r < 7; ++r) CHECK(rep.mean_by_r[r] < 0.25);
  CHECK(rep.qualifying.size() == 41);

  // exact rationals: each measure agrees with a direct count on the 1/8 grid
  spec.r_cap = 1;
  auto r1 = recurrence_set(spec);
  for (std::int64_t n = 0; n <= 40; ++n) {
    int cells = 0;
    for (int j = 0; j < 8; ++j) {
      auto in = [](std::int64_t v) { return ((v % 8) + 8) % 8 < 2; };
      if (in(j) && in(j + n) && in(j + n * n)) ++cells;
    }
    CHECK(r1.measures[static_cast<std::size_t>(n)] == cells / 8.0);
  }
  // matches the oracle's r = 2 scan, which dilates n -> 2n
  spec.polys = {IntPolynomial{0, 2}, IntPolynomial{0, 0, 4}};
  auto r2 = recurrence_set(spec);
  CHECK(r2.qualifying == std::vector<std::int64_t>{0, 4, 8, 12, 16, 20, 24, 28, 32, 36, 40});
  CHECK(*r2.max_gap == 4);

  spec.polys = {IntPolynomial{0, 0, 1}, IntPolynomial{0, 1}};
  CHECK_FALSE(recurrence_set(spec).in_proven_scope);
  spec.polys = {IntPolynomial{1, 1}, IntPolynomial{0, 0, 1}};
  CHECK_THROWS_AS(recurrence_set(spec), HypothesisError);
  spec.polys = {IntPolynomial{0, 1}};
  CHECK_THROWS_AS(recurrence_set(spec), ConfigError);
}

TEST_CASE("recurrence scans fall back to sampling for skew products") {
  dynsys::AffineMap skew(dynsys::IntMatrix{{1, 0}, {1, 1}}, {rc("sqrt(2)-1"), rc("0")});
  auto box = Observable::box({{BigRational(0), BigRational(1, 2)}, {BigRational(0), BigRational(1, 2)}});
  RecurrenceSpec spec{{skew}, {IntPolynomial{0, 1}}, box, BigRational(0), 200};
  spec.samples = 4000;
  spec.seed = 3;
  auto rep = recurrence_set(spec);
  CHECK(rep.method == RecurrenceReport::Method::kSampled);
  CHECK(rep.measures[0] == doctest::Approx(0.25).epsilon(0.1));
  CHECK(rep.qualifying.front() == 0);
  auto again = recurrence_set(spec);
  CHECK(again.measures == rep.measures);
}

TEST_CASE("conditional-expectation lower bound") {
  std::vector<BigRational> mu(4, BigRational(1, 4));
  std::vector<BigRational> c(4, BigRational(2, 3));
  auto eq = holder_lowerbound_check(mu, {{0, 0, 1, 1}, {0, 1, 0, 1}}, c);
  CHECK(eq.lhs == BigRational(8, 27));
  CHECK(eq.rhs == eq.lhs);
  CHECK(eq.holds);
  std::vector<BigRational> f{1, 0, 3, 2};
  auto zero = holder_lowerbound_check(mu, {}, f);
  CHECK(zero.lhs == zero.rhs);

  std::mt19937_64 rng(500);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 16;
    std::vector<BigRational> w(n), g(n);
    BigRational tot = 0;
    for (std::size_t x = 0; x < n; ++x) {
      w[x] = BigRational(static_cast<long>(rng() % 5));
      tot += w[x];
      g[x] = BigRational(static_cast<long>(rng() % 7), 1 + static_cast<long>(rng() % 3));
    }
    if (tot == 0) continue;
    for (auto& v : w) v /= tot;
    std::vector<std::vector<std::size_t>> parts(rng() % 4);
    for (auto& p : parts) {
      const std::size_t cells = 1 + rng() % 5;
      for (std::size_t x = 0; x < n; ++x) p.push_back(rng() % cells);
    }
    CHECK(holder_lowerbound_check(w, parts, g).holds);
  }

  f[1] = -1;
  CHECK_THROWS_AS(holder_lowerbound_check(mu, {}, f), HypothesisError);
  CHECK_THROWS_AS(holder_lowerbound_check({BigRational(1, 2)}, {}, {BigRational(1)}), ConfigError);
}
