#include <atomic>
#include <cstdlib>
#include <string>

#include "netmorph/kernels.hpp"

namespace netmorph::kernels {

#if defined(NETMORPH_HAS_AVX2)
namespace avx2 {
const KernelTable& table();
}
#endif

const KernelTable* avx2_table() {
#if defined(NETMORPH_HAS_AVX2) && (defined(__x86_64__) || defined(__i386__))
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2::table() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* initial_choice() {
  if (const char* env = std::getenv("NETMORPH_ISA")) {
    const std::string want(env);
    if (want == "scalar") return &scalar_table();
    if (want == "avx2" && avx2_table() != nullptr) return avx2_table();
  }
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{initial_choice()};
  return current;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

bool select(std::string_view name) {
  if (name == "scalar") {
    slot().store(&scalar_table());
    return true;
  }
  if (name == "avx2") {
    if (const KernelTable* t = avx2_table()) {
      slot().store(t);
      return true;
    }
  }
  return false;
}

}  // namespace netmorph::kernels
