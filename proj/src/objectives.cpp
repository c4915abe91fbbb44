#include "ipae/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "ipae/errors.hpp"

namespace ipae {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void check_pairwise_inputs(const GaussianCode& code, const NoiseBlock& noise,
                           const PartnerIndex& partners, const char* what) {
    code.validate();
    const std::size_t k = noise.samples_per_row;
    if (k == 0 || noise.eps.rows() != code.batch() * k || noise.eps.cols() != code.dim()) {
        throw ShapeError(std::string(what) + ": noise " + noise.eps.shape_str() + " vs code " +
                         code.mu.shape_str());
    }
    if (partners.empty() || partners.per_anchor() == 0) {
        throw ContractError(std::string(what) + ": empty partner index");
    }
    if (partners.anchors() != code.batch()) {
        throw ShapeError(std::string(what) + ": partner table has " +
                         std::to_string(partners.anchors()) + " anchors for batch " +
                         std::to_string(code.batch()));
    }
}

}  // namespace

std::string_view to_string(RegularizerKind k) {
    switch (k) {
        case RegularizerKind::None: return "none";
        case RegularizerKind::Parametric: return "parametric";
        case RegularizerKind::InformationPotential: return "information_potential";
    }
    return "none";
}

RegularizerKind regularizer_from_string(std::string_view s) {
    if (s == "none") return RegularizerKind::None;
    if (s == "parametric" || s == "vae") return RegularizerKind::Parametric;
    if (s == "information_potential" || s == "ipae") return RegularizerKind::InformationPotential;
    throw ContractError("unknown regularizer kind '" + std::string(s) + "'");
}

void Regularizer::validate(std::size_t batch) const {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw ContractError("regularizer: beta must be >= 0");
    if (samples < 1) throw ContractError("regularizer: K must be >= 1");
    if (partners < 1 || partners > batch) {
        throw ContractError("regularizer: Nj must lie in [1, batch size]");
    }
}

std::string_view to_string(DistortionKind k) {
    return k == DistortionKind::Mse ? "mse" : "bernoulli";
}

DistortionKind distortion_from_string(std::string_view s) {
    if (s == "mse") return DistortionKind::Mse;
    if (s == "bernoulli") return DistortionKind::Bernoulli;
    throw ContractError("unknown distortion '" + std::string(s) + "'");
}

PartnerIndex::PartnerIndex(std::size_t anchors, std::size_t per_anchor, std::vector<std::size_t> table)
    : anchors_(anchors), per_anchor_(per_anchor), table_(std::move(table)) {
    if (table_.size() != anchors * per_anchor) throw ShapeError("PartnerIndex: table size mismatch");
    for (std::size_t j : table_) {
        if (j >= anchors) throw ContractError("PartnerIndex: partner index out of range");
    }
}

PartnerIndex PartnerIndex::all_pairs(std::size_t n) {
    std::vector<std::size_t> t(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) t[i * n + j] = j;
    return {n, n, std::move(t)};
}

PartnerIndex PartnerIndex::draw(Rng& rng, std::size_t n, std::size_t nj) {
    if (n == 0) return {};
    if (n == 1) return {1, 1, {0}};
    nj = std::clamp<std::size_t>(nj, 1, n - 1);
    std::vector<std::size_t> table(n * nj);
    std::vector<std::size_t> pool(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        // Pool of every index except i, then a partial Fisher-Yates draw.
        std::iota(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(i), std::size_t{0});
        std::iota(pool.begin() + static_cast<std::ptrdiff_t>(i), pool.end(), i + 1);
        for (std::size_t s = 0; s < nj; ++s) {
            const std::size_t pick = s + rng.below(pool.size() - s);
            std::swap(pool[s], pool[pick]);
            table[i * nj + s] = pool[s];
        }
    }
    return {n, nj, std::move(table)};
}

double parametric_mi_bound(const GaussianCode& code) {
    code.validate();
    const std::size_t n = code.batch();
    const std::size_t d = code.dim();
    if (n == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* mu = code.mu.data() + i * d;
        const double* sg = code.sigma.data() + i * d;
        double row = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double var = sg[c] * sg[c];
            row += mu[c] * mu[c] + var - std::log(var) - 1.0;
        }
        sum += row;
    }
    return sum / (2.0 * static_cast<double>(n));
}

double nonparametric_entropy_bound(const GaussianCode& code, const NoiseBlock& noise,
                                   const PartnerIndex& partners) {
    check_pairwise_inputs(code, noise, partners, "nonparametric_entropy_bound");
    const std::size_t n = code.batch();
    const std::size_t d = code.dim();
    const std::size_t k = noise.samples_per_row;
    const std::size_t nj = partners.per_anchor();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* mui = code.mu.data() + i * d;
        const double* sgi = code.sigma.data() + i * d;
        for (std::size_t s = 0; s < k; ++s) {
            const double* e = noise.eps.data() + (i * k + s) * d;
            for (std::size_t j : partners.of(i)) {
                const double* muj = code.mu.data() + j * d;
                const double* sgj = code.sigma.data() + j * d;
                double term = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    const double r = muj[c] - mui[c] - sgi[c] * e[c];
                    const double var = sgj[c] * sgj[c];
                    term += r * r / var + std::log(2.0 * std::numbers::pi * var);
                }
                sum += term;
            }
        }
    }
    return sum / (2.0 * static_cast<double>(k * n * nj));
}

double conditional_entropy(const GaussianCode& code) {
    code.validate();
    const std::size_t n = code.batch();
    if (n == 0) return 0.0;
    double sum = 0.0;
    for (double s : code.sigma.flat()) sum += kLog2Pi + 2.0 * std::log(s);
    return sum / (2.0 * static_cast<double>(n));
}

double ip_mi_bound(const GaussianCode& code, const NoiseBlock& noise, const PartnerIndex& partners) {
    check_pairwise_inputs(code, noise, partners, "ip_mi_bound");
    const std::size_t n = code.batch();
    const std::size_t d = code.dim();
    const std::size_t k = noise.samples_per_row;
    const std::size_t nj = partners.per_anchor();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* mui = code.mu.data() + i * d;
        const double* sgi = code.sigma.data() + i * d;
        for (std::size_t s = 0; s < k; ++s) {
            const double* e = noise.eps.data() + (i * k + s) * d;
            for (std::size_t j : partners.of(i)) {
                const double* muj = code.mu.data() + j * d;
                const double* sgj = code.sigma.data() + j * d;
                double term = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    const double r = (muj[c] - mui[c] - sgi[c] * e[c]) / sgj[c];
                    term += r * r;
                }
                sum += term;
            }
        }
    }
    return sum / (2.0 * static_cast<double>(k * n * nj));
}

double mse_distortion(const Matrix& x, const Matrix& recon) {
    require_same_shape(x, recon, "mse_distortion");
    if (x.rows() == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto a = x.row(r);
        const auto b = recon.row(r);
        double row = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) {
            const double diff = b[c] - a[c];
            row += diff * diff;
        }
        sum += row;
    }
    return sum / static_cast<double>(x.rows());
}

double bernoulli_distortion(const Matrix& x, const Matrix& recon) {
    require_same_shape(x, recon, "bernoulli_distortion");
    if (x.rows() == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto a = x.row(r);
        const auto b = recon.row(r);
        double row = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) {
            if (!(a[c] >= 0.0 && a[c] <= 1.0)) {
                throw ContractError("bernoulli_distortion: domain error, target " +
                                    std::to_string(a[c]) + " outside [0, 1]");
            }
            const double p = std::clamp(b[c], kBernoulliClamp, 1.0 - kBernoulliClamp);
            row -= a[c] * std::log(p) + (1.0 - a[c]) * std::log(1.0 - p);
        }
        sum += row;
    }
    return sum / static_cast<double>(x.rows());
}

namespace {

// Adds the gradient of beta * ip_mi_bound w.r.t. mu, sigma (through the
// partner denominators and the partner means) and z = mu_i + sigma_i.eps.
void ip_gradients(const GaussianCode& code, const NoiseBlock& noise, const PartnerIndex& partners,
                  const Matrix& z, double beta, Matrix& g_mu, Matrix& g_sigma, Matrix& g_z) {
    const std::size_t n = code.batch();
    const std::size_t d = code.dim();
    const std::size_t k = noise.samples_per_row;
    const double c2 = 2.0 * beta / (2.0 * static_cast<double>(k * n * partners.per_anchor()));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t s = 0; s < k; ++s) {
            const double* zi = z.data() + (i * k + s) * d;
            double* gz = g_z.data() + (i * k + s) * d;
            for (std::size_t j : partners.of(i)) {
                const double* muj = code.mu.data() + j * d;
                const double* sgj = code.sigma.data() + j * d;
                double* gmu = g_mu.data() + j * d;
                double* gsg = g_sigma.data() + j * d;
                for (std::size_t c = 0; c < d; ++c) {
                    const double inv_var = 1.0 / (sgj[c] * sgj[c]);
                    const double r = muj[c] - zi[c];
                    const double gr = c2 * r * inv_var;
                    gmu[c] += gr;
                    gz[c] -= gr;
                    gsg[c] -= gr * r / sgj[c];
                }
            }
        }
    }
}

}  // namespace

LossBreakdown total_loss(const Matrix& x, const CodecParams& params, const Regularizer& reg,
                         DistortionKind distortion, const NoiseBlock& noise,
                         const PartnerIndex& partners, std::vector<Matrix>* grads) {
    const std::size_t n = x.rows();
    if (n == 0) throw ContractError("total_loss: empty batch");
    reg.validate(n);
    if (noise.samples_per_row != reg.samples) {
        throw ShapeError("total_loss: noise has K=" + std::to_string(noise.samples_per_row) +
                         ", regularizer expects K=" + std::to_string(reg.samples));
    }
    const bool ip = reg.kind == RegularizerKind::InformationPotential;
    if (ip && partners.per_anchor() > reg.partners) {
        throw ContractError("total_loss: partner table wider than Nj");
    }

    const EncodeCache enc = encode_cached(params, x);
    const GaussianCode& code = enc.code;
    const Matrix z = reparameterize(code, noise);
    const DecodeCache dec = decode_cached(params, z);

    const std::size_t k = reg.samples;
    const Matrix x_rep = [&] {
        if (k == 1) return x;
        std::vector<std::size_t> idx(n * k);
        for (std::size_t i = 0; i < n * k; ++i) idx[i] = i / k;
        return x.gather_rows(idx);
    }();

    LossBreakdown out;
    out.distortion = distortion == DistortionKind::Mse ? mse_distortion(x_rep, dec.output)
                                                       : bernoulli_distortion(x_rep, dec.output);
    out.h_z_given_x = conditional_entropy(code);
    switch (reg.kind) {
        case RegularizerKind::None:
            out.mi_bound = 0.0;
            out.h_z_bound = out.h_z_given_x;
            break;
        case RegularizerKind::Parametric:
            out.mi_bound = parametric_mi_bound(code);
            out.h_z_bound = out.h_z_given_x + out.mi_bound;
            break;
        case RegularizerKind::InformationPotential:
            out.mi_bound = ip_mi_bound(code, noise, partners);
            out.h_z_bound = nonparametric_entropy_bound(code, noise, partners);
            break;
    }
    out.total = out.distortion + reg.beta * out.mi_bound;
    std::size_t at_ceiling = 0;
    for (double s : code.sigma.flat()) at_ceiling += s >= kSigmaCeil ? 1 : 0;
    out.sigma_at_ceiling = static_cast<double>(at_ceiling) / static_cast<double>(code.sigma.size());

    if (grads == nullptr) return out;

    // d total / d recon
    const std::size_t rows = x_rep.rows();
    const std::size_t m = x_rep.cols();
    Matrix g_out(rows, m);
    const double inv_rows = 1.0 / static_cast<double>(rows);
    for (std::size_t idx = 0; idx < rows * m; ++idx) {
        const double target = x_rep.data()[idx];
        const double r = dec.output.data()[idx];
        if (distortion == DistortionKind::Mse) {
            g_out.data()[idx] = 2.0 * (r - target) * inv_rows;
        } else if (r > kBernoulliClamp && r < 1.0 - kBernoulliClamp) {
            g_out.data()[idx] = (-target / r + (1.0 - target) / (1.0 - r)) * inv_rows;
        }
    }

    DenseGrads g_dec_out = dense_backward(params.dec_out, dec.hidden, dec.output, std::move(g_out), true);
    DenseGrads g_dec_h = dense_backward(params.dec_hidden, z, dec.hidden, std::move(g_dec_out.x), true);
    Matrix g_z = std::move(g_dec_h.x);

    const std::size_t d = code.dim();
    Matrix g_mu(n, d);
    Matrix g_sigma(n, d);
    if (reg.beta != 0.0) {
        if (reg.kind == RegularizerKind::Parametric) {
            const double scale = reg.beta / static_cast<double>(n);
            for (std::size_t idx = 0; idx < n * d; ++idx) {
                const double mu = code.mu.data()[idx];
                const double sg = code.sigma.data()[idx];
                g_mu.data()[idx] += scale * mu;
                g_sigma.data()[idx] += scale * (sg - 1.0 / sg);
            }
        } else if (ip) {
            ip_gradients(code, noise, partners, z, reg.beta, g_mu, g_sigma, g_z);
        }
    }

    // z = mu + sigma .* eps
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t s = 0; s < k; ++s) {
            const double* gz = g_z.data() + (i * k + s) * d;
            const double* e = noise.eps.data() + (i * k + s) * d;
            for (std::size_t c = 0; c < d; ++c) {
                g_mu(i, c) += gz[c];
                g_sigma(i, c) += gz[c] * e[c];
            }
        }
    }

    // sigma = clamp(exp(logvar / 2)); zero gradient where the clamp is active.
    Matrix g_logvar(n, d);
    for (std::size_t idx = 0; idx < n * d; ++idx) {
        const double raw = std::exp(0.5 * enc.logvar.data()[idx]);
        if (raw > kSigmaFloor && raw < kSigmaCeil) {
            g_logvar.data()[idx] = g_sigma.data()[idx] * 0.5 * code.sigma.data()[idx];
        }
    }

    DenseGrads g_mu_head = dense_backward(params.enc_mu, enc.hidden, code.mu, std::move(g_mu), true);
    Matrix g_hidden = std::move(g_mu_head.x);
    DenseGrads g_lv_head =
        dense_backward(params.enc_logvar, enc.hidden, enc.logvar, std::move(g_logvar), false, &g_hidden);
    DenseGrads g_enc_h = dense_backward(params.enc_hidden, x, enc.hidden, std::move(g_hidden), false);

    grads->clear();
    grads->reserve(2 * CodecParams::kLayerCount);
    for (DenseGrads* g : {&g_enc_h, &g_mu_head, &g_lv_head, &g_dec_h, &g_dec_out}) {
        grads->push_back(std::move(g->W));
        grads->push_back(std::move(g->b));
    }
    return out;
}

}  // namespace ipae
