#include "ipae/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "ipae/errors.hpp"
#include "ipae/kernels.hpp"

namespace ipae {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw ShapeError("Matrix: data length " + std::to_string(data_.size()) + " != " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeError("Matrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix Matrix::gather_rows(std::span<const std::size_t> idx) const {
    Matrix out(idx.size(), cols_);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] >= rows_) throw ShapeError("gather_rows: index out of range");
        std::copy_n(data_.data() + idx[r] * cols_, cols_, out.data() + r * cols_);
    }
    return out;
}

Matrix Matrix::transpose() const {
    Matrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
    return out;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(what) + ": shape " + a.shape_str() + " vs " + b.shape_str());
    }
}

Matrix matmul_nt(const Matrix& x, const Matrix& w) {
    if (x.cols() != w.cols()) {
        throw ShapeError("matmul_nt: " + x.shape_str() + " * (" + w.shape_str() + ")^T");
    }
    Matrix out(x.rows(), w.rows());
    kernels::gemm(kernels::Trans::No, kernels::Trans::Yes, x.rows(), w.rows(), x.cols(), x.data(),
                  x.cols(), w.data(), w.cols(), 0.0, out.data(), out.cols());
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + a.shape_str() + " * " + b.shape_str());
    }
    Matrix out(a.rows(), b.cols());
    kernels::gemm(kernels::Trans::No, kernels::Trans::No, a.rows(), b.cols(), a.cols(), a.data(),
                  a.cols(), b.data(), b.cols(), 0.0, out.data(), out.cols());
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("matmul_tn: (" + a.shape_str() + ")^T * " + b.shape_str());
    }
    Matrix out(a.cols(), b.cols());
    kernels::gemm(kernels::Trans::Yes, kernels::Trans::No, a.cols(), b.cols(), a.rows(), a.data(),
                  a.cols(), b.data(), b.cols(), 0.0, out.data(), out.cols());
    return out;
}

}  // namespace ipae
