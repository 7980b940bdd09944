#pragma once

#include "sparsefuse/simd/kernels.hpp"

namespace sparsefuse::simd {

namespace scalar {
extern const KernelTable kTable;
}

#if defined(SPARSEFUSE_HAVE_AVX2)
namespace avx2 {
extern const KernelTable kTable;
}
#endif

}  // namespace sparsefuse::simd
