#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "petlab/averages.hpp"

using namespace petlab;
using namespace petlab::averages;
using dynsys::IntMatrix;
using dynsys::SamplingScheme;
using dynsys::TrigTerm;

namespace {

RealConstant rc(const char* s) { return RealConstant::parse(s); }

Observable e1(std::size_t dim, std::size_t coord) {
  std::vector<std::int64_t> k(dim, 0);
  k[coord] = 1;
  return Observable::trig(dim, {TrigTerm{k, Complex(1, 0)}});
}

// T = rot(sqrt(2)-1) and S = rot(sqrt(3)-1) on T^2, one coordinate each.
ModelSystem two_rotations() {
  return ModelSystem::torus({AffineMap::rotation({rc("sqrt(2)-1"), 0}), AffineMap::rotation({0, rc("sqrt(3)-1")})});
}

AverageSpec joint_spec(std::int64_t N) {
  return AverageSpec{two_rotations(), {IntPolynomial{0, 1}, IntPolynomial{0, 0, 1}}, {e1(2, 0), e1(2, 1)}, {0, N}};
}

}  // namespace

TEST_CASE("constant observables average to one") {
  auto one = Observable::constant(2, 1.0);
  AverageSpec spec{two_rotations(), {IntPolynomial{0, 3}, IntPolynomial{1, 0, 2}}, {one, one}, {-40, 77}};
  CHECK(multi_average(spec, TorusPoint::zero(2, 4)) == Complex(1.0));
  CHECK(l2_norm_of_averages(spec, dynsys::sample_measure(2, SamplingScheme::random(3, 5))) == 1.0);
}

TEST_CASE("validation") {
  AverageSpec spec = joint_spec(10);
  spec.polys.pop_back();
  CHECK_THROWS_AS(multi_average(spec, TorusPoint::zero(2, 4)), ConfigError);
  spec = joint_spec(10);
  spec.window = {5, 5};
  CHECK_THROWS_AS(multi_average(spec, TorusPoint::zero(2, 4)), ConfigError);
  CHECK_THROWS_AS(ModelSystem::torus({AffineMap(IntMatrix{{1, 0}, {1, 1}}, {rc("sqrt(2)"), 0}),
                                      AffineMap(IntMatrix{{1, 0}, {1, 1}}, {rc("sqrt(3)"), 0})}),
                  HypothesisError);
}

TEST_CASE("single rotation factorizes into a geometric sum") {
  const double a = std::numbers::sqrt2 - 1;
  auto sys = ModelSystem::torus({AffineMap::rotation({rc("sqrt(2)-1")})});
  AverageSpec spec{sys, {IntPolynomial{0, 1}}, {e1(1, 0)}, {0, 1000}};
  TorusPoint x = TorusPoint::from_rationals({BigRational(1, 5)}, 4);
  Complex got = multi_average(spec, x);
  auto e = [](double t) { return std::polar(1.0, 2 * std::numbers::pi * t); };
  Complex want = e(0.2) * (e(1000 * a) - 1.0) / (1000.0 * (e(a) - 1.0));
  CHECK(std::abs(got - want) < 1e-12);
}

TEST_CASE("two rotations along n and n^2 match the oracle") {
  // tests/oracles/averages_oracle.py
  CHECK(std::abs(multi_average(joint_spec(1000), TorusPoint::zero(2, 4))) ==
        doctest::Approx(0.005937494180794).epsilon(1e-9));
  auto samples = dynsys::sample_measure(2, SamplingScheme::random(7, 3));
  CHECK(l2_norm_of_averages(joint_spec(100000), samples) == doctest::Approx(0.001248364363438).epsilon(1e-8));

  AverageSpec shifted = joint_spec(0);
  shifted.window = {500, 1500};
  Complex v = multi_average(shifted, TorusPoint::from_rationals({BigRational(1, 3), BigRational(1, 7)}, 4));
  CHECK(v.real() == doctest::Approx(0.003058069762663).epsilon(1e-9));
  CHECK(v.imag() == doctest::Approx(0.035779964949774).epsilon(1e-9));
}

TEST_CASE("composition trick is exact") {
  // every factor uses the same map; shifting x by T^s and each p_i by s
  // leaves every term unchanged
  AffineMap t(IntMatrix{{1, 0}, {1, 1}}, {rc("sqrt(2)"), rc("1/3")});
  auto sys = ModelSystem::torus({t, t});
  auto f = Observable::trig(2, {{{1, 2}, Complex(1, 0)}, {{0, 1}, Complex(0.5, -0.5)}});
  auto g = Observable::box({{BigRational(0), BigRational(1, 2)}, {BigRational(1, 3), BigRational(1)}});
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    TorusPoint x = TorusPoint::zero(2, 4);
    for (auto& c : x.coords)
      for (std::size_t l = 0; l < 4; ++l) c.data()[l] = rng();
    const long s = static_cast<long>(rng() % 200) - 100;
    AverageSpec a{sys, {IntPolynomial{0, 0, 1}, IntPolynomial{0, 3, 0, 1}}, {f, g}, {0, 300}};
    AverageSpec b = a;
    b.polys = {IntPolynomial{s, 0, 1}, IntPolynomial{s, 3, 0, 1}};
    TorusPoint y = dynsys::affine_power_apply(t, BigInt(s), x);
    CHECK(product_sequence(a, y) == product_sequence(b, x));
  }
}

TEST_CASE("averages are bounded by the sup norms") {
  auto sys = two_rotations();
  auto f = Observable::trig(2, {{{1, 0}, Complex(0.7, 0)}, {{2, -1}, Complex(0, 0.3)}});
  auto g = Observable::box({{BigRational(0), BigRational(1, 3)}, {BigRational(0), BigRational(1)}});
  for (std::int64_t N : {1, 7, 100}) {
    AverageSpec spec{sys, {IntPolynomial{0, 1}, IntPolynomial{0, 2, 1}}, {f, g}, {0, N}};
    for (const auto& s : dynsys::sample_measure(2, SamplingScheme::grid(3)))
      CHECK(std::abs(multi_average(spec, s.x)) <= f.sup_bound() * g.sup_bound() + 1e-15);
  }
}

TEST_CASE("finite systems agree with exact enumeration") {
  FiniteSystem fs({6, 4}, {{1, 0}, {2, 1}});
  auto sys = ModelSystem::finite(fs);
  std::mt19937_64 rng(8);
  std::vector<BigRational> fv(fs.size()), gv(fs.size());
  std::vector<Complex> fc(fs.size()), gc(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    fv[i] = BigRational(static_cast<long>(rng() % 7) - 3, 4);
    gv[i] = BigRational(static_cast<long>(rng() % 5), 3);
    fc[i] = fv[i].get_d();
    gc[i] = gv[i].get_d();
  }
  IntPolynomial p{0, 1, 1}, q{2, 0, 0, 1};
  // p and q are 12-periodic modulo lcm(6, 4) = 12
  AverageSpec spec{sys, {p, q}, {Observable::finite(fc), Observable::finite(gc)}, {0, 12}};
  for (std::size_t x = 0; x < fs.size(); ++x) {
    BigRational exact = 0;
    for (long n = 0; n < 12; ++n) {
      std::size_t a = fs.apply(x, 0, p.evaluate(n));
      std::size_t b = fs.apply(x, 1, q.evaluate(n));
      exact += fv[a] * gv[b];
    }
    exact /= 12;
    CHECK(multi_average(spec, x).real() == doctest::Approx(exact.get_d()).epsilon(1e-14));
    spec.window = {12 * 1000, 12 * 1001};
    CHECK(multi_average(spec, x).real() == doctest::Approx(exact.get_d()).epsilon(1e-14));
    spec.window = {0, 12};
  }
}

TEST_CASE("determinism") {
  auto spec = joint_spec(5000);
  auto x = TorusPoint::from_rationals({BigRational(2, 9), BigRational(5, 11)}, 4);
  auto a = multi_average(spec, x);
  auto b = multi_average(spec, x);
  CHECK(std::memcmp(&a, &b, sizeof a) == 0);
}

TEST_CASE("convergence probes") {
  auto constant = convergence_probe([](std::int64_t) { return Complex(0.25); }, default_schedule(4, false, 10));
  for (double g : constant.gaps) CHECK(g == 0.0);
  CHECK(constant.tail_gap == 0.0);

  auto alternating = convergence_probe([](std::int64_t n) { return Complex(n % 2 == 0 ? 1.0 : -1.0); },
                                       {{0, 11}, {0, 101}, {0, 1001}, {0, 10001}});
  CHECK(alternating.gaps.back() < alternating.gaps.front());
  CHECK(std::abs(alternating.values.back()) < 1e-3);

  // Z/12 with rational rotations: full periods give identical values
  FiniteSystem fs = FiniteSystem::cyclic(12, {1, 5});
  std::vector<Complex> f(12);
  for (int i = 0; i < 12; ++i) f[static_cast<std::size_t>(i)] = std::cos(2 * std::numbers::pi * i / 12.0) + (i % 3);
  AverageSpec spec{ModelSystem::finite(fs), {IntPolynomial{0, 1}, IntPolynomial{0, 0, 1}},
                   {Observable::finite(f), Observable::finite(f)}, {0, 12}};
  auto probe = convergence_probe(spec, std::size_t{3}, {{0, 12}, {12, 36}, {0, 120}, {5, 1205}});
  for (double g : probe.gaps) CHECK(g < 1e-14);

  auto sched = default_schedule(3, true);
  CHECK(sched[2].N == 4000);
  CHECK(sched[2].M == 2000);
}

TEST_CASE("weighted averages") {
  auto sys = ModelSystem::torus({AffineMap::rotation({rc("sqrt(2)-1")})});
  AverageSpec spec{sys, {IntPolynomial{0, 1}}, {e1(1, 0)}, {0, 100000}};
  TorusPoint origin = TorusPoint::zero(1, 4);

  auto ones = WeightSequence::table([](std::int64_t) { return Complex(1.0); }, 1.0);
  CHECK(weighted_average(spec, ones, origin) == multi_average(spec, origin));

  // (-1)^n as the orbit of rotation by 1/2 under e(x)
  auto sign = WeightSequence::orbit(AffineMap::rotation({rc("1/2")}), origin, e1(1, 0));
  CHECK(std::abs(weighted_average(spec, sign, origin)) == doctest::Approx(0.000033792031270).epsilon(1e-6));
  CHECK(std::abs(weighted_average(spec, sign, origin)) < 0.05);
  auto sign_table = WeightSequence::table([](std::int64_t n) { return Complex(n % 2 == 0 ? 1.0 : -1.0); }, 1.0);
  CHECK(std::abs(weighted_average(spec, sign_table, origin) - weighted_average(spec, sign, origin)) < 1e-12);

  auto beta = WeightSequence::orbit(AffineMap::rotation({rc("sqrt(3)-1")}), origin, e1(1, 0));
  CHECK(std::abs(weighted_average(spec, beta, origin)) == doctest::Approx(0.000022107506193).epsilon(1e-6));

  auto bad = WeightSequence::table([](std::int64_t) { return Complex(2.0); }, 1.0);
  CHECK_THROWS_AS(weighted_average(spec, bad, origin), HypothesisError);
}

TEST_CASE("van der Corput diagnostic") {
  const std::vector<double> w1{1.0};
  auto one = vdc_numeric_bound([](std::int64_t) { return std::vector<Complex>{1.0}; }, w1, 8, {0, 100});
  for (double b : one.b) CHECK(b == doctest::Approx(1.0));
  CHECK(one.bound == doctest::Approx(1.0));

  const double a = std::numbers::sqrt2 - 1;
  auto linear = vdc_numeric_bound(
      [&](std::int64_t n) { return std::vector<Complex>{std::polar(1.0, 2 * std::numbers::pi * a * n)}; }, w1, 5,
      {0, 5000});
  for (double b : linear.b) CHECK(b == doctest::Approx(1.0));

  auto quadratic = vdc_numeric_bound(
      [&](std::int64_t n) {
        long double t = std::sqrt(2.0L) * static_cast<long double>(n) * n;
        t -= std::floor(t);
        return std::vector<Complex>{std::polar(1.0, 2 * std::numbers::pi * static_cast<double>(t))};
      },
      w1, 5, {0, 5000});
  for (double b : quadratic.b) CHECK(b < 0.05);

  const std::vector<double> w2{1.0, 1.0};
  auto alt = vdc_numeric_bound(
      [](std::int64_t n) {
        return n % 2 == 0 ? std::vector<Complex>{1.0, 0.0} : std::vector<Complex>{0.0, 1.0};
      },
      w2, 10, {0, 1000});
  for (std::size_t h = 1; h <= 10; ++h) CHECK(alt.b[h - 1] == (h % 2 == 0 ? 1.0 : 0.0));
  CHECK(alt.bound == doctest::Approx(0.5));
}
