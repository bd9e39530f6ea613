#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "petlab/kernels.hpp"

using namespace petlab;

namespace {

constexpr double kExpiTolerance = 1e-15;

std::vector<double> random_doubles(std::mt19937_64& rng, std::size_t n, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("dispatch") {
  CHECK(std::string(kernels::scalar().name) == "scalar");
  const auto* v = kernels::avx2();
  if (v != nullptr) CHECK(std::string(v->name) == "avx2");
  MESSAGE("active kernels: " << std::string(kernels::active().name));
}

TEST_CASE("expi reference values") {
  for (const auto* t : {&kernels::scalar(), kernels::avx2()}) {
    if (t == nullptr) continue;
    CAPTURE(t->name);
    const std::uint64_t phase[] = {0, std::uint64_t{1} << 62, std::uint64_t{1} << 63, std::uint64_t{3} << 62,
                                   std::uint64_t{1} << 61};
    double re[5], im[5];
    t->expi(phase, 5, re, im);
    CHECK(re[0] == 1.0);
    CHECK(im[0] == 0.0);
    // quarter turns are exact in both variants
    CHECK(re[1] == 0.0);
    CHECK(im[1] == 1.0);
    CHECK(re[2] == -1.0);
    CHECK(im[2] == 0.0);
    CHECK(re[3] == 0.0);
    CHECK(im[3] == -1.0);
    CHECK(re[4] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
    CHECK(im[4] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  }
}

TEST_CASE("vector kernels agree with the scalar reference") {
  const auto* v = kernels::avx2();
  if (v == nullptr) {
    MESSAGE("AVX2 kernels unavailable; equivalence not exercised");
    return;
  }
  const auto& s = kernels::scalar();
  std::mt19937_64 rng(2024);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 17u, 64u, 1001u}) {
    CAPTURE(n);
    std::vector<std::uint64_t> phase(n);
    for (auto& p : phase) p = rng();
    std::vector<double> sr(n), si(n), vr(n), vi(n);
    s.expi(phase.data(), n, sr.data(), si.data());
    v->expi(phase.data(), n, vr.data(), vi.data());
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(std::abs(sr[i] - vr[i]) <= kExpiTolerance);
      REQUIRE(std::abs(si[i] - vi[i]) <= kExpiTolerance);
      REQUIRE(std::abs(vr[i] * vr[i] + vi[i] * vi[i] - 1.0) <= 4e-16);
    }

    auto a = random_doubles(rng, n, 3.0), b = random_doubles(rng, n, 3.0);
    auto c = random_doubles(rng, n, 3.0), d = random_doubles(rng, n, 3.0);
    CHECK(same_bits(s.sum(a.data(), n), v->sum(a.data(), n)));
    CHECK(same_bits(s.norm2_sum(a.data(), b.data(), n), v->norm2_sum(a.data(), b.data(), n)));

    auto ar1 = a, ai1 = b, ar2 = a, ai2 = b;
    s.complex_mul_inplace(ar1.data(), ai1.data(), c.data(), d.data(), n);
    v->complex_mul_inplace(ar2.data(), ai2.data(), c.data(), d.data(), n);
    CHECK(ar1 == ar2);
    CHECK(ai1 == ai2);

    auto acc_r1 = c, acc_i1 = d, acc_r2 = c, acc_i2 = d;
    s.complex_axpy(0.25, -1.5, a.data(), b.data(), n, acc_r1.data(), acc_i1.data());
    v->complex_axpy(0.25, -1.5, a.data(), b.data(), n, acc_r2.data(), acc_i2.data());
    CHECK(acc_r1 == acc_r2);
    CHECK(acc_i1 == acc_i2);

    for (std::size_t vertices : {1u, 2u, 4u, 8u}) {
      std::vector<std::vector<double>> re, im;
      std::vector<const double*> pr, pi;
      std::vector<unsigned char> conj;
      for (std::size_t k = 0; k < vertices; ++k) {
        re.push_back(random_doubles(rng, n, 1.0));
        im.push_back(random_doubles(rng, n, 1.0));
        conj.push_back(static_cast<unsigned char>(__builtin_popcountll(k) & 1));
      }
      for (std::size_t k = 0; k < vertices; ++k) {
        pr.push_back(re[k].data());
        pi.push_back(im[k].data());
      }
      double r1, i1, r2, i2;
      s.cube_product_sum(pr.data(), pi.data(), conj.data(), vertices, n, &r1, &i1);
      v->cube_product_sum(pr.data(), pi.data(), conj.data(), vertices, n, &r2, &i2);
      CHECK(same_bits(r1, r2));
      CHECK(same_bits(i1, i2));
      CHECK(same_bits(s.cube_product_sum_real(pr.data(), vertices, n), v->cube_product_sum_real(pr.data(), vertices, n)));
    }
  }
}
