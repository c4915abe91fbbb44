#include <cmath>

#include "ipae/errors.hpp"
#include "ipae/eval.hpp"

namespace ipae {

double mean_distance_to_centers(const Matrix& recons, std::span<const std::size_t> labels,
                                const Matrix& centers) {
    if (centers.empty()) throw ContractError("mean_distance_to_centers: no centers");
    if (labels.size() != recons.rows()) throw ShapeError("mean_distance_to_centers: label count mismatch");
    if (recons.cols() != centers.cols()) throw ShapeError("mean_distance_to_centers: dimension mismatch");
    if (recons.rows() == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < recons.rows(); ++i) {
        if (labels[i] >= centers.rows()) throw ContractError("mean_distance_to_centers: label without center");
        const auto r = recons.row(i);
        const auto c = centers.row(labels[i]);
        double sq = 0.0;
        for (std::size_t q = 0; q < r.size(); ++q) sq += (r[q] - c[q]) * (r[q] - c[q]);
        sum += std::sqrt(sq);
    }
    return sum / static_cast<double>(recons.rows());
}

}  // namespace ipae
