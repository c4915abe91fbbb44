#include <atomic>
#include <cstdlib>
#include <string_view>

#include "ipae/kernels.hpp"

namespace ipae::kernels {
namespace {

const KernelTable kScalar{"scalar", &detail::gemm_scalar, &detail::dot_scalar};

#if defined(IPAE_HAVE_AVX2)
const KernelTable kAvx2{"avx2", &detail::gemm_avx2, &detail::dot_avx2};

bool cpu_has_avx2() {
#if defined(__GNUC__) || defined(__clang__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}
#endif

const KernelTable* select_default() {
    const KernelTable* simd = avx2_table();
    if (const char* env = std::getenv("IPAE_KERNELS")) {
        const std::string_view want{env};
        if (want == "scalar") return &kScalar;
        if (want == "avx2" && simd != nullptr) return simd;
    }
    return simd != nullptr ? simd : &kScalar;
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{select_default()};
    return table;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* avx2_table() {
#if defined(IPAE_HAVE_AVX2)
    static const bool supported = cpu_has_avx2();
    return supported ? &kAvx2 : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void set_active(const KernelTable& table) { current().store(&table, std::memory_order_release); }

}  // namespace ipae::kernels
