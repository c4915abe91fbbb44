#include "ipae/kernels.hpp"

namespace ipae::kernels::detail {

void gemm_scalar(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
                 const double* a, std::size_t lda, const double* b, std::size_t ldb,
                 double beta, double* c, std::size_t ldc) {
    const bool at = ta == Trans::Yes;
    const bool bt = tb == Trans::Yes;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                const double av = at ? a[p * lda + i] : a[i * lda + p];
                const double bv = bt ? b[j * ldb + p] : b[p * ldb + j];
                s += av * bv;
            }
            double& out = c[i * ldc + j];
            out = beta == 0.0 ? s : out + s;
        }
    }
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace ipae::kernels::detail
