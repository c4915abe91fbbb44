#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "ipae/matrix.hpp"
#include "ipae/rng.hpp"

namespace ipae {

enum class Activation { Identity, Relu, Sigmoid };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

double sigmoid(double x);

/// Fully connected layer y = act(x W^T + b). W is out x in, b is 1 x out.
struct DenseLayer {
    Matrix W;
    Matrix b;
    Activation act = Activation::Identity;

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out, Activation a);

    std::size_t in_dim() const noexcept { return W.cols(); }
    std::size_t out_dim() const noexcept { return W.rows(); }

    /// Uniform Glorot init: W ~ U(-s, s), s = sqrt(6 / (in + out)); b = 0.
    void init_glorot(Rng& rng);
};

struct DenseGrads {
    Matrix W;
    Matrix b;
    Matrix x;  // empty when not requested
};

Matrix dense_forward(const DenseLayer& layer, const Matrix& x);

/// Gradients of sum(upstream .* y) where y = dense_forward(layer, x) was
/// computed beforehand. The activation derivative is taken from y.
/// With `input_grad_acc` set, the input gradient is added into that matrix
/// instead of being returned in DenseGrads::x.
DenseGrads dense_backward(const DenseLayer& layer, const Matrix& x, const Matrix& y, Matrix upstream,
                          bool want_input_grad = true, Matrix* input_grad_acc = nullptr);

/// Convenience overload that recomputes the forward output.
DenseGrads dense_backward(const DenseLayer& layer, const Matrix& x, const Matrix& upstream);

/// Multiplies `grad` in place by the derivative of `act`, expressed through the output y.
void apply_activation_grad(Activation act, const Matrix& y, Matrix& grad);

using ParamRefs = std::vector<std::reference_wrapper<Matrix>>;
using ConstParamRefs = std::vector<std::reference_wrapper<const Matrix>>;

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::uint64_t t = 0;
    std::vector<Matrix> m;
    std::vector<Matrix> v;
};

/// One bias-corrected Adam update. Moment buffers are allocated on first use.
void adam_step(const ParamRefs& params, const ConstParamRefs& grads, AdamState& state);

struct GradCheckOptions {
    double h = 1e-5;                  // relative to max(1, |theta|)
    std::size_t coords_per_tensor = 64;  // all coordinates when the tensor is smaller
    std::uint64_t seed = 1;
    double denom_floor = 1e-7;        // relative error uses max(|a|, |n|, floor)
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t tensor = 0;  // location of the worst coordinate
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t checked = 0;
};

/// Compares analytic gradients against central differences of `loss`, which
/// must read the current values of `params`. Parameters are restored on exit.
/// Throws NumericError when the loss is not finite at a probe point.
GradCheckResult grad_check(const std::function<double()>& loss, const ParamRefs& params,
                           const ConstParamRefs& analytic, const GradCheckOptions& opts = {});

}  // namespace ipae
