#pragma once

// Independent reference implementations used by the tests. Everything here is
// plain loops over the definitions; nothing calls the library's objective or
// forward-pass code.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "ipae/codec.hpp"
#include "ipae/objectives.hpp"

namespace oracle {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// KL(N(mu, sigma^2) || N(0, 1)) by composite Simpson integration of p log(p/q).
inline double kl_quadrature_1d(double mu, double sigma) {
    const int steps = 40000;
    const double lo = mu - 14.0 * sigma;
    const double hi = mu + 14.0 * sigma;
    const double h = (hi - lo) / steps;
    auto f = [&](double z) {
        const double u = (z - mu) / sigma;
        const double log_p = -0.5 * u * u - std::log(sigma) - 0.5 * std::log(kTwoPi);
        const double log_q = -0.5 * z * z - 0.5 * std::log(kTwoPi);
        return std::exp(log_p) * (log_p - log_q);
    };
    double s = f(lo) + f(hi);
    for (int i = 1; i < steps; ++i) s += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// Batch mean of the per-sample closed-form KL to the standard normal.
inline double closed_form_kl(const ipae::GaussianCode& code) {
    double total = 0.0;
    for (std::size_t i = 0; i < code.batch(); ++i) {
        double kl = 0.0;
        for (std::size_t c = 0; c < code.dim(); ++c) {
            const double m = code.mu(i, c);
            const double s2 = code.sigma(i, c) * code.sigma(i, c);
            kl += 0.5 * (m * m + s2 - std::log(s2) - 1.0);
        }
        total += kl;
    }
    return total / static_cast<double>(code.batch());
}

/// The log-determinant part of the entropy bound alone.
inline double log_terms(const ipae::GaussianCode& code, const ipae::NoiseBlock& noise,
                        const ipae::PartnerIndex& partners) {
    const std::size_t n = code.batch(), k = noise.samples_per_row, nj = partners.per_anchor();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            for (std::size_t j : partners.of(i)) {
                for (std::size_t c = 0; c < code.dim(); ++c) {
                    s += std::log(kTwoPi * code.sigma(j, c) * code.sigma(j, c));
                }
            }
        }
    }
    return s / (2.0 * static_cast<double>(k * n * nj));
}

inline double self_log_terms(const ipae::GaussianCode& code, const ipae::PartnerIndex& partners) {
    return log_terms(code, ipae::NoiseBlock::zeros(code.batch(), 1, code.dim()), partners);
}

/// Mean over anchors, noise samples and partners of the squared Mahalanobis
/// distance from the partner mean to the anchor's sampled code, halved.
inline double ip_bound(const ipae::GaussianCode& code, const ipae::NoiseBlock& noise,
                       const ipae::PartnerIndex& partners) {
    const std::size_t n = code.batch(), k = noise.samples_per_row, nj = partners.per_anchor();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            for (std::size_t j : partners.of(i)) {
                for (std::size_t c = 0; c < code.dim(); ++c) {
                    const double z = code.mu(i, c) + code.sigma(i, c) * noise.eps(i * k + kk, c);
                    const double r = code.mu(j, c) - z;
                    s += r * r / (code.sigma(j, c) * code.sigma(j, c));
                }
            }
        }
    }
    return s / (2.0 * static_cast<double>(k * n * nj));
}

inline std::vector<double> layer(const ipae::DenseLayer& l, const std::vector<double>& in) {
    std::vector<double> out(l.W.rows());
    for (std::size_t o = 0; o < l.W.rows(); ++o) {
        double s = l.b(0, o);
        for (std::size_t i = 0; i < in.size(); ++i) s += l.W(o, i) * in[i];
        switch (l.act) {
            case ipae::Activation::Identity: break;
            case ipae::Activation::Relu: s = s > 0.0 ? s : 0.0; break;
            case ipae::Activation::Sigmoid: s = 1.0 / (1.0 + std::exp(-s)); break;
        }
        out[o] = s;
    }
    return out;
}

/// MSE distortion over all K samples plus beta times the active bound.
inline double total_loss(const ipae::Matrix& x, const ipae::CodecParams& p, const ipae::Regularizer& reg,
                         const ipae::NoiseBlock& noise, const ipae::PartnerIndex& partners) {
    const std::size_t n = x.rows(), k = reg.samples;
    ipae::GaussianCode code{ipae::Matrix(n, p.spec().latent_dim), ipae::Matrix(n, p.spec().latent_dim)};
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> xi(x.row(i).begin(), x.row(i).end());
        const auto h = layer(p.enc_hidden, xi);
        const auto mu = layer(p.enc_mu, h);
        const auto lv = layer(p.enc_logvar, h);
        for (std::size_t c = 0; c < mu.size(); ++c) {
            code.mu(i, c) = mu[c];
            code.sigma(i, c) = std::clamp(std::exp(0.5 * lv[c]), ipae::kSigmaFloor, ipae::kSigmaCeil);
        }
    }
    double distortion = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            std::vector<double> z(code.dim());
            for (std::size_t c = 0; c < z.size(); ++c) {
                z[c] = code.mu(i, c) + code.sigma(i, c) * noise.eps(i * k + kk, c);
            }
            const auto r = layer(p.dec_out, layer(p.dec_hidden, z));
            for (std::size_t c = 0; c < r.size(); ++c) distortion += (r[c] - x(i, c)) * (r[c] - x(i, c));
        }
    }
    distortion /= static_cast<double>(n * k);
    double bound = 0.0;
    if (reg.kind == ipae::RegularizerKind::Parametric) bound = closed_form_kl(code);
    if (reg.kind == ipae::RegularizerKind::InformationPotential) bound = ip_bound(code, noise, partners);
    return distortion + reg.beta * bound;
}

}  // namespace oracle
