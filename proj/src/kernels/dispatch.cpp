#include "kernels_impl.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace moe::kernels {

const KernelTable* avx2_table() noexcept {
#if defined(MOE_HAVE_AVX2_TU)
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &detail::avx2_table_unchecked() : nullptr;
#else
    return nullptr;
#endif
}

namespace {

const KernelTable* initial_table() noexcept {
    if (const char* env = std::getenv("MOE_KERNELS")) {
        const std::string_view want(env);
        if (want == "scalar") return &scalar_table();
        if (want == "avx2" && avx2_table() != nullptr) return avx2_table();
    }
    if (const KernelTable* t = avx2_table()) return t;
    return &scalar_table();
}

std::atomic<const KernelTable*>& current() noexcept {
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

}  // namespace

const KernelTable& active() noexcept { return *current().load(std::memory_order_acquire); }

bool select(std::string_view name) noexcept {
    const KernelTable* t = nullptr;
    if (name == "scalar") t = &scalar_table();
    else if (name == "avx2") t = avx2_table();
    if (t == nullptr) return false;
    current().store(t, std::memory_order_release);
    return true;
}

}  // namespace moe::kernels
