#pragma once

// Dense arithmetic kernels with a scalar reference path and SIMD variants.
//
// Every kernel exists as a plain scalar implementation (the reference) and,
// where the CPU supports it, an AVX2+FMA implementation. The active table is
// chosen once at startup from CPUID and may be forced with the environment
// variable IPAE_KERNELS=scalar|avx2. The scalar GEMM sums each output
// sequentially over the reduction index; the AVX2 GEMM does the same within
// blocks of 256 and adds the block sums, so the two differ by FMA rounding and
// that regrouping. The SIMD dot product reassociates into lane partial sums.
// Results are bit-reproducible for a fixed table.

#include <cstddef>
#include <string_view>

namespace ipae::kernels {

enum class Trans { No, Yes };

/// C = beta*C + op(A) * op(B), row-major. op(A) is m x k, op(B) is k x n.
/// beta must be 0 or 1; with beta == 0 the prior contents of C are ignored.
using GemmFn = void (*)(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
                        const double* a, std::size_t lda, const double* b, std::size_t ldb,
                        double beta, double* c, std::size_t ldc);

using DotFn = double (*)(const double* a, const double* b, std::size_t n);

struct KernelTable {
    std::string_view name;
    GemmFn gemm;
    DotFn dot;
};

const KernelTable& scalar_table();

/// nullptr when the build or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();

/// Table selected for this process.
const KernelTable& active();

/// Overrides the process-wide selection. Intended for tests and benchmarks.
void set_active(const KernelTable& table);

inline void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
                 const double* a, std::size_t lda, const double* b, std::size_t ldb,
                 double beta, double* c, std::size_t ldc) {
    active().gemm(ta, tb, m, n, k, a, lda, b, ldb, beta, c, ldc);
}

inline double dot(const double* a, const double* b, std::size_t n) {
    return active().dot(a, b, n);
}

namespace detail {
void gemm_scalar(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
                 const double* a, std::size_t lda, const double* b, std::size_t ldb,
                 double beta, double* c, std::size_t ldc);
double dot_scalar(const double* a, const double* b, std::size_t n);

#if defined(IPAE_HAVE_AVX2)
void gemm_avx2(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
               const double* a, std::size_t lda, const double* b, std::size_t ldb,
               double beta, double* c, std::size_t ldc);
double dot_avx2(const double* a, const double* b, std::size_t n);
#endif
}  // namespace detail

}  // namespace ipae::kernels
