#include "ipae/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ipae/errors.hpp"
#include "ipae/kernels.hpp"

namespace ipae {

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
    }
    return "identity";
}

Activation activation_from_string(std::string_view s) {
    if (s == "identity") return Activation::Identity;
    if (s == "relu") return Activation::Relu;
    if (s == "sigmoid") return Activation::Sigmoid;
    throw ContractError("unknown activation '" + std::string(s) + "'");
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

DenseLayer::DenseLayer(std::size_t in, std::size_t out, Activation a)
    : W(out, in), b(1, out), act(a) {}

void DenseLayer::init_glorot(Rng& rng) {
    const double s = std::sqrt(6.0 / static_cast<double>(in_dim() + out_dim()));
    for (double& w : W.flat()) w = rng.uniform(-s, s);
    b.fill(0.0);
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& x) {
    if (x.cols() != layer.in_dim()) {
        throw ShapeError("dense_forward: input " + x.shape_str() + " vs weights " +
                         layer.W.shape_str());
    }
    Matrix y = matmul_nt(x, layer.W);
    const std::size_t out = layer.out_dim();
    const double* bias = layer.b.data();
    for (std::size_t r = 0; r < y.rows(); ++r) {
        double* yr = y.data() + r * out;
        switch (layer.act) {
            case Activation::Identity:
                for (std::size_t c = 0; c < out; ++c) yr[c] += bias[c];
                break;
            case Activation::Relu:
                for (std::size_t c = 0; c < out; ++c) yr[c] = std::max(yr[c] + bias[c], 0.0);
                break;
            case Activation::Sigmoid:
                for (std::size_t c = 0; c < out; ++c) yr[c] = sigmoid(yr[c] + bias[c]);
                break;
        }
    }
    return y;
}

void apply_activation_grad(Activation act, const Matrix& y, Matrix& grad) {
    require_same_shape(y, grad, "activation grad");
    const double* yv = y.data();
    double* g = grad.data();
    const std::size_t n = grad.size();
    switch (act) {
        case Activation::Identity: break;
        case Activation::Relu:
            for (std::size_t i = 0; i < n; ++i) g[i] = yv[i] > 0.0 ? g[i] : 0.0;
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < n; ++i) g[i] *= yv[i] * (1.0 - yv[i]);
            break;
    }
}

DenseGrads dense_backward(const DenseLayer& layer, const Matrix& x, const Matrix& y, Matrix upstream,
                          bool want_input_grad, Matrix* input_grad_acc) {
    if (x.cols() != layer.in_dim() || y.cols() != layer.out_dim() || x.rows() != y.rows()) {
        throw ShapeError("dense_backward: x " + x.shape_str() + ", y " + y.shape_str() +
                         ", W " + layer.W.shape_str());
    }
    require_same_shape(y, upstream, "dense_backward upstream");

    Matrix delta = std::move(upstream);
    apply_activation_grad(layer.act, y, delta);

    DenseGrads g;
    g.W = matmul_tn(delta, x);
    g.b = Matrix(1, layer.out_dim());
    double* gb = g.b.data();
    for (std::size_t r = 0; r < delta.rows(); ++r) {
        const double* dr = delta.data() + r * delta.cols();
        for (std::size_t c = 0; c < delta.cols(); ++c) gb[c] += dr[c];
    }
    if (input_grad_acc != nullptr) {
        if (input_grad_acc->rows() != x.rows() || input_grad_acc->cols() != x.cols()) {
            throw ShapeError("dense_backward: accumulator " + input_grad_acc->shape_str() + " vs input " +
                             x.shape_str());
        }
        kernels::gemm(kernels::Trans::No, kernels::Trans::No, delta.rows(), layer.in_dim(), layer.out_dim(),
                      delta.data(), delta.cols(), layer.W.data(), layer.W.cols(), 1.0, input_grad_acc->data(),
                      input_grad_acc->cols());
    } else if (want_input_grad) {
        g.x = matmul(delta, layer.W);
    }
    return g;
}

DenseGrads dense_backward(const DenseLayer& layer, const Matrix& x, const Matrix& upstream) {
    return dense_backward(layer, x, dense_forward(layer, x), upstream, true);
}

void adam_step(const ParamRefs& params, const ConstParamRefs& grads, AdamState& state) {
    if (params.size() != grads.size()) throw ShapeError("adam_step: param/grad count mismatch");
    if (state.m.empty()) {
        for (const Matrix& p : params) {
            state.m.emplace_back(p.rows(), p.cols());
            state.v.emplace_back(p.rows(), p.cols());
        }
    }
    if (state.m.size() != params.size()) throw ShapeError("adam_step: state/param count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        require_same_shape(params[i].get(), grads[i].get(), "adam_step grad");
        require_same_shape(params[i].get(), state.m[i], "adam_step state");
    }

    ++state.t;
    const auto& cfg = state.config;
    const double t = static_cast<double>(state.t);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        double* p = params[i].get().data();
        const double* g = grads[i].get().data();
        double* m = state.m[i].data();
        double* v = state.v[i].data();
        const std::size_t n = params[i].get().size();
        for (std::size_t k = 0; k < n; ++k) {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            p[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

GradCheckResult grad_check(const std::function<double()>& loss, const ParamRefs& params,
                           const ConstParamRefs& analytic, const GradCheckOptions& opts) {
    if (params.size() != analytic.size()) throw ShapeError("grad_check: param/grad count mismatch");
    Rng rng(opts.seed);
    GradCheckResult res;
    for (std::size_t t = 0; t < params.size(); ++t) {
        Matrix& p = params[t].get();
        const Matrix& g = analytic[t].get();
        require_same_shape(p, g, "grad_check");
        std::vector<std::size_t> coords(p.size());
        for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
        if (coords.size() > opts.coords_per_tensor) {
            rng.shuffle(coords);
            coords.resize(opts.coords_per_tensor);
        }
        for (std::size_t idx : coords) {
            double& theta = p.data()[idx];
            const double saved = theta;
            const double h = opts.h * std::max(1.0, std::abs(saved));
            theta = saved + h;
            const double up = loss();
            theta = saved - h;
            const double down = loss();
            theta = saved;
            if (!std::isfinite(up) || !std::isfinite(down)) {
                throw NumericError("grad_check: non-finite loss probing tensor " +
                                   std::to_string(t) + " index " + std::to_string(idx));
            }
            const double numeric = (up - down) / (2.0 * h);
            const double a = g.data()[idx];
            const double denom = std::max({std::abs(a), std::abs(numeric), opts.denom_floor});
            const double err = std::abs(a - numeric) / denom;
            if (res.checked++ == 0 || err > res.max_rel_error) {
                res.max_rel_error = err;
                res.tensor = t;
                res.index = idx;
                res.analytic = a;
                res.numeric = numeric;
            }
        }
    }
    return res;
}

}  // namespace ipae
