#include <atomic>
#include <cstdlib>
#include <string_view>

#include "querc/kernels.hpp"

namespace querc::kernels {

#if defined(QUERC_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif

const KernelTable* avx2_table() {
#if defined(QUERC_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &avx2_kernels() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

Isa detect() {
  if (const char* env = std::getenv("QUERC_KERNELS"); env != nullptr && std::string_view(env) == "scalar") {
    return Isa::scalar;
  }
  return avx2_table() != nullptr ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& selected() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

Isa active_isa() { return selected().load(std::memory_order_relaxed); }

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool force_isa(Isa isa) {
  if (isa == Isa::avx2 && avx2_table() == nullptr) return false;
  selected().store(isa, std::memory_order_relaxed);
  return true;
}

const KernelTable& active() {
  if (active_isa() == Isa::avx2) return *avx2_table();
  return scalar_table();
}

}  // namespace querc::kernels
