// Compiled with -mavx2 -ffp-contract=off; only reached through the
// dispatcher after a CPU feature check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "kernels_impl.hpp"

namespace petlab::kernels {

namespace {

// Cephes minimax coefficients for sin and cos on [-pi/4, pi/4].
constexpr double kS0 = 1.58962301576546568060e-10;
constexpr double kS1 = -2.50507477628578072866e-8;
constexpr double kS2 = 2.75573136213857245213e-6;
constexpr double kS3 = -1.98412698295895385996e-4;
constexpr double kS4 = 8.33333333332211858878e-3;
constexpr double kS5 = -1.66666666666666307295e-1;
constexpr double kC0 = -1.13585365213876817300e-11;
constexpr double kC1 = 2.08757008419747316778e-9;
constexpr double kC2 = -2.75573141792967388112e-7;
constexpr double kC3 = 2.48015872888517045348e-5;
constexpr double kC4 = -1.38888888888730564116e-3;
constexpr double kC5 = 4.16666666666665929218e-2;

inline __m256d poly6(__m256d z, double a0, double a1, double a2, double a3, double a4, double a5) {
  __m256d p = _mm256_set1_pd(a0);
  p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(a1));
  p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(a2));
  p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(a3));
  p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(a4));
  return _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(a5));
}

// Four phases at once. The turn is split as j/4 + r with |r| <= 1/8 turn;
// r keeps 53 significant bits via the 1.5 * 2^52 conversion trick.
inline void expi4(__m256i t, __m256d& re, __m256d& im) {
  const __m256i half_quadrant = _mm256_set1_epi64x(std::int64_t{1} << 61);
  __m256i j = _mm256_srli_epi64(_mm256_add_epi64(t, half_quadrant), 62);
  __m256i r = _mm256_sub_epi64(t, _mm256_slli_epi64(j, 62));

  // arithmetic r >> 11 as a double, without 64-bit arithmetic shifts
  const __m256i sign = _mm256_set1_epi64x(static_cast<std::int64_t>(0x8000000000000000ULL));
  __m256i biased = _mm256_srli_epi64(_mm256_xor_si256(r, sign), 11);
  biased = _mm256_add_epi64(biased, _mm256_set1_epi64x(0x4328000000000000LL));
  __m256d rd = _mm256_sub_pd(_mm256_castsi256_pd(biased), _mm256_set1_pd(6755399441055744.0));
  __m256d x = _mm256_mul_pd(rd, _mm256_set1_pd(2.0 * 3.14159265358979323846 / 9007199254740992.0));

  __m256d z = _mm256_mul_pd(x, x);
  __m256d s = _mm256_add_pd(x, _mm256_mul_pd(_mm256_mul_pd(x, z), poly6(z, kS0, kS1, kS2, kS3, kS4, kS5)));
  __m256d c = _mm256_add_pd(_mm256_sub_pd(_mm256_set1_pd(1.0), _mm256_mul_pd(_mm256_set1_pd(0.5), z)),
                            _mm256_mul_pd(_mm256_mul_pd(z, z), poly6(z, kC0, kC1, kC2, kC3, kC4, kC5)));

  const __m256i one = _mm256_set1_epi64x(1);
  const __m256i two = _mm256_set1_epi64x(2);
  __m256d swap = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(j, one), one));
  __m256d neg_re = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(_mm256_add_epi64(j, one), two), two));
  __m256d neg_im = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(j, two), two));
  __m256d cr = _mm256_blendv_pd(c, s, swap);
  __m256d sr = _mm256_blendv_pd(s, c, swap);
  const __m256d sign_bit = _mm256_set1_pd(-0.0);
  re = _mm256_xor_pd(cr, _mm256_and_pd(neg_re, sign_bit));
  im = _mm256_xor_pd(sr, _mm256_and_pd(neg_im, sign_bit));
}

void expi(const std::uint64_t* phase, std::size_t n, double* re, double* im) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r, m;
    expi4(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(phase + i)), r, m);
    _mm256_storeu_pd(re + i, r);
    _mm256_storeu_pd(im + i, m);
  }
  if (i < n) {
    alignas(32) std::uint64_t buf[4] = {0, 0, 0, 0};
    alignas(32) double br[4], bi[4];
    std::copy(phase + i, phase + n, buf);
    __m256d r, m;
    expi4(_mm256_load_si256(reinterpret_cast<const __m256i*>(buf)), r, m);
    _mm256_store_pd(br, r);
    _mm256_store_pd(bi, m);
    std::copy(br, br + (n - i), re + i);
    std::copy(bi, bi + (n - i), im + i);
  }
}

void complex_mul_inplace(double* ar, double* ai, const double* br, const double* bi, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d a_r = _mm256_loadu_pd(ar + i), a_i = _mm256_loadu_pd(ai + i);
    __m256d b_r = _mm256_loadu_pd(br + i), b_i = _mm256_loadu_pd(bi + i);
    _mm256_storeu_pd(ar + i, _mm256_sub_pd(_mm256_mul_pd(a_r, b_r), _mm256_mul_pd(a_i, b_i)));
    _mm256_storeu_pd(ai + i, _mm256_add_pd(_mm256_mul_pd(a_r, b_i), _mm256_mul_pd(a_i, b_r)));
  }
  for (; i < n; ++i) {
    double r = ar[i] * br[i] - ai[i] * bi[i];
    double m = ar[i] * bi[i] + ai[i] * br[i];
    ar[i] = r;
    ai[i] = m;
  }
}

void complex_axpy(double cr, double ci, const double* re, const double* im, std::size_t n, double* acc_re,
                  double* acc_im) {
  const __m256d vr = _mm256_set1_pd(cr), vi = _mm256_set1_pd(ci);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d x = _mm256_loadu_pd(re + i), y = _mm256_loadu_pd(im + i);
    __m256d r = _mm256_sub_pd(_mm256_mul_pd(vr, x), _mm256_mul_pd(vi, y));
    __m256d m = _mm256_add_pd(_mm256_mul_pd(vr, y), _mm256_mul_pd(vi, x));
    _mm256_storeu_pd(acc_re + i, _mm256_add_pd(_mm256_loadu_pd(acc_re + i), r));
    _mm256_storeu_pd(acc_im + i, _mm256_add_pd(_mm256_loadu_pd(acc_im + i), m));
  }
  for (; i < n; ++i) {
    acc_re[i] += cr * re[i] - ci * im[i];
    acc_im[i] += cr * im[i] + ci * re[i];
  }
}

inline double fold(__m256d acc, const double* tail, std::size_t count) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  for (std::size_t t = 0; t < count; ++t) lane[t] += tail[t];
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  return fold(acc, x + i, n - i);
}

double norm2_sum(const double* re, const double* im, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_loadu_pd(re + i), m = _mm256_loadu_pd(im + i);
    acc = _mm256_add_pd(acc, _mm256_add_pd(_mm256_mul_pd(r, r), _mm256_mul_pd(m, m)));
  }
  double tail[4];
  for (std::size_t t = 0; i + t < n; ++t) tail[t] = re[i + t] * re[i + t] + im[i + t] * im[i + t];
  return fold(acc, tail, n - i);
}

void cube_product_sum(const double* const* re, const double* const* im, const unsigned char* conj,
                      std::size_t vertices, std::size_t n, double* out_re, double* out_im) {
  __m256d acc_r = _mm256_setzero_pd(), acc_i = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d pr = _mm256_set1_pd(1.0), pi = _mm256_setzero_pd();
    for (std::size_t v = 0; v < vertices; ++v) {
      __m256d br = _mm256_loadu_pd(re[v] + i);
      __m256d bi = _mm256_loadu_pd(im[v] + i);
      if (conj[v]) bi = _mm256_sub_pd(_mm256_setzero_pd(), bi);
      __m256d r = _mm256_sub_pd(_mm256_mul_pd(pr, br), _mm256_mul_pd(pi, bi));
      __m256d m = _mm256_add_pd(_mm256_mul_pd(pr, bi), _mm256_mul_pd(pi, br));
      pr = r;
      pi = m;
    }
    acc_r = _mm256_add_pd(acc_r, pr);
    acc_i = _mm256_add_pd(acc_i, pi);
  }
  double tr[4], ti[4];
  for (std::size_t t = 0; i + t < n; ++t) {
    double pr = 1.0, pi = 0.0;
    for (std::size_t v = 0; v < vertices; ++v) {
      double br = re[v][i + t];
      double bi = conj[v] ? 0.0 - im[v][i + t] : im[v][i + t];
      double r = pr * br - pi * bi;
      double m = pr * bi + pi * br;
      pr = r;
      pi = m;
    }
    tr[t] = pr;
    ti[t] = pi;
  }
  *out_re = fold(acc_r, tr, n - i);
  *out_im = fold(acc_i, ti, n - i);
}

double cube_product_sum_real(const double* const* x, std::size_t vertices, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d p = _mm256_set1_pd(1.0);
    for (std::size_t v = 0; v < vertices; ++v) p = _mm256_mul_pd(p, _mm256_loadu_pd(x[v] + i));
    acc = _mm256_add_pd(acc, p);
  }
  double tail[4];
  for (std::size_t t = 0; i + t < n; ++t) {
    double p = 1.0;
    for (std::size_t v = 0; v < vertices; ++v) p *= x[v][i + t];
    tail[t] = p;
  }
  return fold(acc, tail, n - i);
}

const Table kAvx2{"avx2", expi, complex_mul_inplace, complex_axpy, sum, norm2_sum, cube_product_sum,
                  cube_product_sum_real};

}  // namespace

const Table* avx2_table() { return &kAvx2; }

}  // namespace petlab::kernels
