#pragma once

#include "gips/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define GIPS_HAVE_AVX2_KERNELS 1
#else
#define GIPS_HAVE_AVX2_KERNELS 0
#endif

namespace gips::kernels {

#if GIPS_HAVE_AVX2_KERNELS
const KernelTable& avx2_kernel_table() noexcept;
#endif

}  // namespace gips::kernels
