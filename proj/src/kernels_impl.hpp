#pragma once

#include "petlab/kernels.hpp"

namespace petlab::kernels {

// Defined in kernels_avx2.cpp when PETLAB_HAVE_AVX2 is set.
const Table* avx2_table();

}  // namespace petlab::kernels
