#include <atomic>

#include "kernels_impl.hpp"
#include "sparsefuse/error.hpp"

namespace sparsefuse::simd {
namespace {

Isa detect() {
#if defined(SPARSEFUSE_HAVE_AVX2)
  if (__builtin_cpu_supports("avx2")) return Isa::kAvx2;
#endif
  return Isa::kScalar;
}

std::atomic<Isa>& selected() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(SPARSEFUSE_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels(Isa isa) {
  if (!isa_available(isa)) {
    throw InvalidInput("SIMD kernels for " + std::string(isa_name(isa)) + " are not available");
  }
#if defined(SPARSEFUSE_HAVE_AVX2)
  if (isa == Isa::kAvx2) return avx2::kTable;
#endif
  return scalar::kTable;
}

const KernelTable& kernels() { return kernels(selected().load(std::memory_order_relaxed)); }

Isa active_isa() { return selected().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw InvalidInput("SIMD kernels for " + std::string(isa_name(isa)) + " are not available");
  }
  selected().store(isa, std::memory_order_relaxed);
}

}  // namespace sparsefuse::simd
