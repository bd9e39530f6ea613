#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference version;
// AVX2 versions are chosen at runtime when the CPU supports them.
// Setting PETLAB_KERNELS=scalar in the environment forces the reference path.
//
// Summation kernels use a fixed 4-lane interleaved order in both variants,
// so their results are bit-identical. The e(theta) kernel differs between
// variants by a few ulps.

#include <cstddef>
#include <cstdint>

namespace petlab::kernels {

struct Table {
  const char* name;

  // (re, im)[i] = e(phase[i] / 2^64) = (cos, sin)(2 pi phase[i] / 2^64).
  void (*expi)(const std::uint64_t* phase, std::size_t n, double* re, double* im);

  // a[i] <- a[i] * b[i] (complex, split storage).
  void (*complex_mul_inplace)(double* ar, double* ai, const double* br, const double* bi, std::size_t n);

  // acc[i] <- acc[i] + c * (re[i], im[i]) with a complex scalar c.
  void (*complex_axpy)(double cr, double ci, const double* re, const double* im, std::size_t n, double* acc_re,
                       double* acc_im);

  // Sum of x[0..n): lane j accumulates x[i] with i = j mod 4 in index order,
  // the result is (l0 + l1) + (l2 + l3).
  double (*sum)(const double* x, std::size_t n);

  // Sum of |z|^2 in the same canonical order.
  double (*norm2_sum)(const double* re, const double* im, std::size_t n);

  // Sum over i of prod_v f_v[i], with f_v conjugated when conj[v] is set
  // (complex, split storage). Products are formed in vertex order.
  void (*cube_product_sum)(const double* const* re, const double* const* im, const unsigned char* conj,
                           std::size_t vertices, std::size_t n, double* out_re, double* out_im);

  // Real version of cube_product_sum.
  double (*cube_product_sum_real)(const double* const* x, std::size_t vertices, std::size_t n);
};

const Table& scalar();
// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const Table* avx2();
// The table used by the library: avx2() if available and not overridden.
const Table& active();

}  // namespace petlab::kernels
