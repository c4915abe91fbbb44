// Compiled with -mavx2 -mfma; only reached through the dispatch table after a
// CPUID check.

#include <immintrin.h>

#include <algorithm>
#include <vector>

#include "ipae/kernels.hpp"

namespace ipae::kernels::detail {
namespace {

constexpr std::size_t kMr = 6;
constexpr std::size_t kNr = 8;
// Cache blocking: a kKc x kNr slice of B stays in L1, a kMc x kKc block of A in L2.
constexpr std::size_t kKc = 256;
constexpr std::size_t kMc = 96;
constexpr std::size_t kNc = 1024;

// Packs op(A) (m x k) into row panels of kMr: panel-major, then p, then row.
// Rows past m are zero-filled.
void pack_a(Trans ta, std::size_t m, std::size_t k, const double* a, std::size_t lda,
            double* out) {
    const std::size_t panels = (m + kMr - 1) / kMr;
    for (std::size_t ip = 0; ip < panels; ++ip) {
        const std::size_t i0 = ip * kMr;
        const std::size_t rows = std::min(kMr, m - i0);
        double* dst = out + ip * kMr * k;
        if (ta == Trans::No) {
            for (std::size_t p = 0; p < k; ++p) {
                std::size_t r = 0;
                for (; r < rows; ++r) dst[p * kMr + r] = a[(i0 + r) * lda + p];
                for (; r < kMr; ++r) dst[p * kMr + r] = 0.0;
            }
        } else {
            for (std::size_t p = 0; p < k; ++p) {
                const double* src = a + p * lda + i0;
                std::size_t r = 0;
                for (; r < rows; ++r) dst[p * kMr + r] = src[r];
                for (; r < kMr; ++r) dst[p * kMr + r] = 0.0;
            }
        }
    }
}

// Packs op(B) (k x n) into column panels of kNr: panel-major, then p, then column.
void pack_b(Trans tb, std::size_t n, std::size_t k, const double* b, std::size_t ldb,
            double* out) {
    const std::size_t panels = (n + kNr - 1) / kNr;
    for (std::size_t jp = 0; jp < panels; ++jp) {
        const std::size_t j0 = jp * kNr;
        const std::size_t cols = std::min(kNr, n - j0);
        double* dst = out + jp * kNr * k;
        if (tb == Trans::No) {
            for (std::size_t p = 0; p < k; ++p) {
                const double* src = b + p * ldb + j0;
                std::size_t c = 0;
                for (; c < cols; ++c) dst[p * kNr + c] = src[c];
                for (; c < kNr; ++c) dst[p * kNr + c] = 0.0;
            }
        } else {
            for (std::size_t p = 0; p < k; ++p) {
                std::size_t c = 0;
                for (; c < cols; ++c) dst[p * kNr + c] = b[(j0 + c) * ldb + p];
                for (; c < kNr; ++c) dst[p * kNr + c] = 0.0;
            }
        }
    }
}

// 6x8 register tile: acc[r] holds row r, columns 0-3 and 4-7.
void micro_kernel(std::size_t k, const double* ap, const double* bp, double* out, std::size_t ldo,
                  bool accumulate) {
    __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
    __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
    __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
    __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
    __m256d c40 = _mm256_setzero_pd(), c41 = _mm256_setzero_pd();
    __m256d c50 = _mm256_setzero_pd(), c51 = _mm256_setzero_pd();
    for (std::size_t p = 0; p < k; ++p) {
        const __m256d b0 = _mm256_loadu_pd(bp);
        const __m256d b1 = _mm256_loadu_pd(bp + 4);
        __m256d a = _mm256_broadcast_sd(ap + 0);
        c00 = _mm256_fmadd_pd(a, b0, c00);
        c01 = _mm256_fmadd_pd(a, b1, c01);
        a = _mm256_broadcast_sd(ap + 1);
        c10 = _mm256_fmadd_pd(a, b0, c10);
        c11 = _mm256_fmadd_pd(a, b1, c11);
        a = _mm256_broadcast_sd(ap + 2);
        c20 = _mm256_fmadd_pd(a, b0, c20);
        c21 = _mm256_fmadd_pd(a, b1, c21);
        a = _mm256_broadcast_sd(ap + 3);
        c30 = _mm256_fmadd_pd(a, b0, c30);
        c31 = _mm256_fmadd_pd(a, b1, c31);
        a = _mm256_broadcast_sd(ap + 4);
        c40 = _mm256_fmadd_pd(a, b0, c40);
        c41 = _mm256_fmadd_pd(a, b1, c41);
        a = _mm256_broadcast_sd(ap + 5);
        c50 = _mm256_fmadd_pd(a, b0, c50);
        c51 = _mm256_fmadd_pd(a, b1, c51);
        ap += kMr;
        bp += kNr;
    }
    const __m256d acc[kMr][2] = {{c00, c01}, {c10, c11}, {c20, c21}, {c30, c31}, {c40, c41}, {c50, c51}};
    for (std::size_t r = 0; r < kMr; ++r) {
        double* o = out + r * ldo;
        if (accumulate) {
            _mm256_storeu_pd(o, _mm256_add_pd(_mm256_loadu_pd(o), acc[r][0]));
            _mm256_storeu_pd(o + 4, _mm256_add_pd(_mm256_loadu_pd(o + 4), acc[r][1]));
        } else {
            _mm256_storeu_pd(o, acc[r][0]);
            _mm256_storeu_pd(o + 4, acc[r][1]);
        }
    }
}

}  // namespace

void gemm_avx2(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
               const double* a, std::size_t lda, const double* b, std::size_t ldb,
               double beta, double* c, std::size_t ldc) {
    if (m == 0 || n == 0) return;
    if (k == 0) {
        if (beta == 0.0) {
            for (std::size_t i = 0; i < m; ++i) std::fill_n(c + i * ldc, n, 0.0);
        }
        return;
    }

    // Thread-local scratch keeps repeated calls from reallocating.
    thread_local std::vector<double> a_pack;
    thread_local std::vector<double> b_pack;
    a_pack.resize(((std::min(m, kMc) + kMr - 1) / kMr) * kMr * std::min(k, kKc));
    b_pack.resize(((std::min(n, kNc) + kNr - 1) / kNr) * kNr * std::min(k, kKc));

    alignas(32) double tile[kMr][kNr];
    for (std::size_t jc = 0; jc < n; jc += kNc) {
        const std::size_t nc = std::min(kNc, n - jc);
        const std::size_t b_panels = (nc + kNr - 1) / kNr;
        for (std::size_t pc = 0; pc < k; pc += kKc) {
            const std::size_t kc = std::min(kKc, k - pc);
            const bool overwrite = pc == 0 && beta == 0.0;
            const double* bsrc = tb == Trans::No ? b + pc * ldb + jc : b + jc * ldb + pc;
            pack_b(tb, nc, kc, bsrc, ldb, b_pack.data());
            for (std::size_t ic = 0; ic < m; ic += kMc) {
                const std::size_t mc = std::min(kMc, m - ic);
                const std::size_t a_panels = (mc + kMr - 1) / kMr;
                const double* asrc = ta == Trans::No ? a + ic * lda + pc : a + pc * lda + ic;
                pack_a(ta, mc, kc, asrc, lda, a_pack.data());
                for (std::size_t jp = 0; jp < b_panels; ++jp) {
                    const std::size_t j0 = jc + jp * kNr;
                    const std::size_t cols = std::min(kNr, n - j0);
                    const double* bp = b_pack.data() + jp * kNr * kc;
                    for (std::size_t ip = 0; ip < a_panels; ++ip) {
                        const std::size_t i0 = ic + ip * kMr;
                        const std::size_t rows = std::min(kMr, m - i0);
                        const double* ap = a_pack.data() + ip * kMr * kc;
                        double* cblk = c + i0 * ldc + j0;
                        if (rows == kMr && cols == kNr) {
                            micro_kernel(kc, ap, bp, cblk, ldc, !overwrite);
                            continue;
                        }
                        micro_kernel(kc, ap, bp, tile[0], kNr, false);
                        for (std::size_t r = 0; r < rows; ++r) {
                            double* crow = cblk + r * ldc;
                            if (overwrite) {
                                for (std::size_t q = 0; q < cols; ++q) crow[q] = tile[r][q];
                            } else {
                                for (std::size_t q = 0; q < cols; ++q) crow[q] += tile[r][q];
                            }
                        }
                    }
                }
            }
        }
    }
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
    double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace ipae::kernels::detail
