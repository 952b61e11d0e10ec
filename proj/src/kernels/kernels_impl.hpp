#pragma once

#include "moe/kernels.hpp"

namespace moe::kernels::detail {

#if defined(MOE_HAVE_AVX2_TU)
const KernelTable& avx2_table_unchecked() noexcept;
#endif

}  // namespace moe::kernels::detail
