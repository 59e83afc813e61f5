#include <cstdlib>
#include <string_view>

#include "tcmpc/kernels.hpp"

namespace tcmpc::kernels {

#if !defined(TCMPC_HAVE_AVX2)
const KernelTable* avx2_table() { return nullptr; }
#endif

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable& active() {
  static const KernelTable& chosen = [] () -> const KernelTable& {
    const char* forced = std::getenv("TCMPC_SIMD");
    if (forced != nullptr && std::string_view(forced) == "scalar") return scalar_table();
    if (const KernelTable* t = avx2_table(); t != nullptr && cpu_has_avx2()) return *t;
    return scalar_table();
  }();
  return chosen;
}

}  // namespace tcmpc::kernels
