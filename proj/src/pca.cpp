#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "ipae/errors.hpp"
#include "ipae/eval.hpp"

namespace ipae {

PcaResult pca_project(const Matrix& z, std::size_t k, const std::function<void(const std::string&)>& warn) {
    const std::size_t n = z.rows();
    const std::size_t d = z.cols();
    if (k == 0 || n <= k) throw ContractError("pca_project: need more rows than components");

    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMat> data(z.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    const Eigen::RowVectorXd mean = data.colwise().mean();
    const RowMat centered = data.rowwise() - mean;
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw NumericError("pca_project: eigendecomposition failed");
    // Eigen returns ascending eigenvalues.
    const Eigen::VectorXd evals = solver.eigenvalues();
    const Eigen::MatrixXd evecs = solver.eigenvectors();
    const double top = std::max(evals(static_cast<Eigen::Index>(d) - 1), 0.0);
    const double tol = 1e-12 * std::max(top, 1e-300);

    std::size_t keep = 0;
    for (std::size_t c = 0; c < std::min(k, d); ++c) {
        if (evals(static_cast<Eigen::Index>(d - 1 - c)) > tol) ++keep;
    }
    if (keep < k && warn) {
        warn("pca_project: covariance rank " + std::to_string(keep) + " below requested " + std::to_string(k));
    }

    PcaResult res;
    res.mean.assign(mean.data(), mean.data() + d);
    res.components = Matrix(keep, d);
    res.variances.resize(keep);
    for (std::size_t c = 0; c < keep; ++c) {
        const auto col = static_cast<Eigen::Index>(d - 1 - c);
        Eigen::VectorXd v = evecs.col(col);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        for (std::size_t q = 0; q < d; ++q) res.components(c, q) = v(static_cast<Eigen::Index>(q));
        res.variances[c] = evals(col);
    }
    res.projection = Matrix(n, keep);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < keep; ++c) {
            double s = 0.0;
            for (std::size_t q = 0; q < d; ++q) s += centered(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)) * res.components(c, q);
            res.projection(i, c) = s;
        }
    }
    return res;
}

}  // namespace ipae
