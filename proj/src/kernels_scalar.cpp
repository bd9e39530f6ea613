#include <cmath>
#include <numbers>

#include "kernels_impl.hpp"

namespace petlab::kernels {

namespace {

void expi(const std::uint64_t* phase, std::size_t n, double* re, double* im) {
  // Same reduction as the vector path: quadrant j and a remainder of at most
  // 1/8 turn, so quarter-turn phases come out exact.
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t j = (phase[i] + (std::uint64_t{1} << 61)) >> 62;
    const auto r = static_cast<std::int64_t>(phase[i] - (j << 62));
    const double x = static_cast<double>(r >> 11) * (2.0 * std::numbers::pi / 9007199254740992.0);
    const double c = std::cos(x), s = std::sin(x);
    switch (j) {
      case 0: re[i] = c; im[i] = s; break;
      case 1: re[i] = -s; im[i] = c; break;
      case 2: re[i] = -c; im[i] = -s; break;
      default: re[i] = s; im[i] = -c; break;
    }
  }
}

void complex_mul_inplace(double* ar, double* ai, const double* br, const double* bi, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double r = ar[i] * br[i] - ai[i] * bi[i];
    double m = ar[i] * bi[i] + ai[i] * br[i];
    ar[i] = r;
    ai[i] = m;
  }
}

void complex_axpy(double cr, double ci, const double* re, const double* im, std::size_t n, double* acc_re,
                  double* acc_im) {
  for (std::size_t i = 0; i < n; ++i) {
    acc_re[i] += cr * re[i] - ci * im[i];
    acc_im[i] += cr * im[i] + ci * re[i];
  }
}

double sum(const double* x, std::size_t n) {
  double lane[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) lane[i & 3] += x[i];
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double norm2_sum(const double* re, const double* im, std::size_t n) {
  double lane[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) lane[i & 3] += re[i] * re[i] + im[i] * im[i];
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void cube_product_sum(const double* const* re, const double* const* im, const unsigned char* conj,
                      std::size_t vertices, std::size_t n, double* out_re, double* out_im) {
  double lr[4] = {0, 0, 0, 0};
  double li[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    double pr = 1.0, pi = 0.0;
    for (std::size_t v = 0; v < vertices; ++v) {
      double br = re[v][i];
      double bi = conj[v] ? 0.0 - im[v][i] : im[v][i];
      double r = pr * br - pi * bi;
      double m = pr * bi + pi * br;
      pr = r;
      pi = m;
    }
    lr[i & 3] += pr;
    li[i & 3] += pi;
  }
  *out_re = (lr[0] + lr[1]) + (lr[2] + lr[3]);
  *out_im = (li[0] + li[1]) + (li[2] + li[3]);
}

double cube_product_sum_real(const double* const* x, std::size_t vertices, std::size_t n) {
  double lane[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    double p = 1.0;
    for (std::size_t v = 0; v < vertices; ++v) p *= x[v][i];
    lane[i & 3] += p;
  }
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

const Table kScalar{"scalar", expi, complex_mul_inplace, complex_axpy, sum, norm2_sum, cube_product_sum,
                    cube_product_sum_real};

}  // namespace

const Table& scalar() { return kScalar; }

}  // namespace petlab::kernels
