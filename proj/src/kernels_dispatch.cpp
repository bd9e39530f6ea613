#include <cstdlib>
#include <cstring>

#include "kernels_impl.hpp"

namespace petlab::kernels {

const Table* avx2() {
#if defined(PETLAB_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const Table& active() {
  static const Table* chosen = [] {
    const char* force = std::getenv("PETLAB_KERNELS");
    if (force != nullptr && std::strcmp(force, "scalar") == 0) return &scalar();
    const Table* v = avx2();
    return v != nullptr ? v : &scalar();
  }();
  return *chosen;
}

}  // namespace petlab::kernels
