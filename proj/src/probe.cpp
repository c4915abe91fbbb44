#include <algorithm>
#include <cmath>
#include <numeric>

#include "ipae/errors.hpp"
#include "ipae/eval.hpp"
#include "ipae/rng.hpp"

namespace ipae {

double linear_probe(const Matrix& train_feats, std::span<const std::size_t> train_labels,
                    const Matrix& test_feats, std::span<const std::size_t> test_labels,
                    const ProbeOptions& opts) {
    if (train_feats.rows() != train_labels.size() || test_feats.rows() != test_labels.size()) {
        throw ShapeError("linear_probe: feature/label count mismatch");
    }
    if (train_feats.cols() != test_feats.cols()) throw ShapeError("linear_probe: feature dimension mismatch");
    if (train_feats.rows() == 0 || test_feats.rows() == 0) throw ContractError("linear_probe: empty input");

    std::size_t classes = 0;
    for (std::size_t l : train_labels) classes = std::max(classes, l + 1);
    for (std::size_t l : test_labels) classes = std::max(classes, l + 1);
    std::vector<std::size_t> seen(classes, 0);
    for (std::size_t l : train_labels) ++seen[l];
    if (std::count_if(seen.begin(), seen.end(), [](std::size_t c) { return c > 0; }) < 2) {
        throw ContractError("linear_probe: training labels contain fewer than two classes");
    }

    const std::size_t n = train_feats.rows();
    const std::size_t d = train_feats.cols();
    std::vector<double> mean(d, 0.0), scale(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t q = 0; q < d; ++q) mean[q] += train_feats(i, q);
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t q = 0; q < d; ++q) scale[q] += (train_feats(i, q) - mean[q]) * (train_feats(i, q) - mean[q]);
    for (double& s : scale) {
        s = std::sqrt(s / static_cast<double>(n));
        s = s > 1e-12 ? 1.0 / s : 1.0;
    }
    auto standardize = [&](const Matrix& m) {
        Matrix out(m.rows(), d);
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t q = 0; q < d; ++q) out(i, q) = (m(i, q) - mean[q]) * scale[q];
        return out;
    };
    const Matrix xtr = standardize(train_feats);
    const Matrix xte = standardize(test_feats);

    Matrix w(classes, d);
    std::vector<double> b(classes, 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(opts.seed);
    double t = 0.0;
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t i : order) {
            const double eta = opts.lr / (1.0 + opts.lr * opts.lambda * t);
            t += 1.0;
            const auto xi = xtr.row(i);
            for (std::size_t c = 0; c < classes; ++c) {
                const double y = train_labels[i] == c ? 1.0 : -1.0;
                auto wc = w.row(c);
                double score = b[c];
                for (std::size_t q = 0; q < d; ++q) score += wc[q] * xi[q];
                const double shrink = 1.0 - eta * opts.lambda;
                for (double& v : wc) v *= shrink;
                if (y * score < 1.0) {
                    for (std::size_t q = 0; q < d; ++q) wc[q] += eta * y * xi[q];
                    b[c] += eta * y;
                }
            }
        }
    }

    std::size_t wrong = 0;
    for (std::size_t i = 0; i < xte.rows(); ++i) {
        const auto xi = xte.row(i);
        std::size_t best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < classes; ++c) {
            double score = b[c];
            for (std::size_t q = 0; q < d; ++q) score += w(c, q) * xi[q];
            if (score > best_score) {
                best_score = score;
                best = c;
            }
        }
        if (best != test_labels[i]) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(xte.rows());
}

}  // namespace ipae
