#pragma once

// Information-theoretic regularizers and the rate-distortion training loss.
//
// All sums range over the current minibatch of N anchors. With K noise draws
// per anchor and Nj partners j per anchor, the pairwise quantities are
// averaged with weight 1 / (K * N * Nj).

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ipae/codec.hpp"
#include "ipae/matrix.hpp"
#include "ipae/rng.hpp"

namespace ipae {

enum class RegularizerKind { None, Parametric, InformationPotential };

std::string_view to_string(RegularizerKind k);
/// Accepts "none", "parametric" (alias "vae"), "information_potential" (alias "ipae").
RegularizerKind regularizer_from_string(std::string_view s);

struct Regularizer {
    RegularizerKind kind = RegularizerKind::InformationPotential;
    double beta = 0.001;
    std::size_t samples = 1;   // K
    std::size_t partners = 1;  // Nj

    /// Throws ContractError unless beta >= 0, K >= 1 and 1 <= Nj <= batch.
    void validate(std::size_t batch) const;

    friend bool operator==(const Regularizer&, const Regularizer&) = default;
};

enum class DistortionKind { Mse, Bernoulli };

std::string_view to_string(DistortionKind k);
DistortionKind distortion_from_string(std::string_view s);

/// Partner indices j for each anchor i, stored as an N x Nj table.
class PartnerIndex {
public:
    PartnerIndex() = default;
    PartnerIndex(std::size_t anchors, std::size_t per_anchor, std::vector<std::size_t> table);

    /// Every j in [0, N), including j == i.
    static PartnerIndex all_pairs(std::size_t n);
    /// Nj partners per anchor drawn uniformly without replacement from the
    /// other N - 1 rows. Nj is capped at N - 1; a batch of one pairs with itself.
    static PartnerIndex draw(Rng& rng, std::size_t n, std::size_t nj);

    std::size_t anchors() const noexcept { return anchors_; }
    std::size_t per_anchor() const noexcept { return per_anchor_; }
    bool empty() const noexcept { return table_.empty(); }
    std::span<const std::size_t> of(std::size_t i) const noexcept {
        return {table_.data() + i * per_anchor_, per_anchor_};
    }

private:
    std::size_t anchors_ = 0;
    std::size_t per_anchor_ = 0;
    std::vector<std::size_t> table_;
};

/// Batch-mean KL(N(mu, diag sigma^2) || N(0, I)):
/// (1/2N) sum_i (|mu_i|^2 + |sigma_i^2|_1 - sum log sigma_i^2 - d).
double parametric_mi_bound(const GaussianCode& code);

/// Jensen upper bound on H(z) from the pairwise Gaussian mixture:
/// (1/2KNNj) sum_{i,k,j} [ |(mu_j - mu_i - sigma_i.eps_k) / sigma_j|^2 + log|2 pi diag sigma_j^2| ].
double nonparametric_entropy_bound(const GaussianCode& code, const NoiseBlock& noise,
                                   const PartnerIndex& partners);

/// (1/2N) sum_i log|2 pi diag sigma_i^2|. This omits the d/2 term of the exact
/// Gaussian differential entropy, so ip_mi_bound of an input-independent
/// encoder is about d/2 rather than 0.
double conditional_entropy(const GaussianCode& code);

/// Information-potential bound on I(x;z):
/// (1/2KNNj) sum_{i,k,j} |(mu_j - mu_i - sigma_i.eps_k) / sigma_j|^2.
double ip_mi_bound(const GaussianCode& code, const NoiseBlock& noise, const PartnerIndex& partners);

/// Mean over rows of the squared Euclidean distance.
double mse_distortion(const Matrix& x, const Matrix& recon);

inline constexpr double kBernoulliClamp = 1e-7;

/// Mean over rows of -sum[x log r + (1-x) log(1-r)], r clamped to
/// [1e-7, 1 - 1e-7]. Throws ContractError if x leaves [0, 1].
double bernoulli_distortion(const Matrix& x, const Matrix& recon);

struct LossBreakdown {
    double total = 0.0;
    double distortion = 0.0;
    double mi_bound = 0.0;     // active regularizer before beta scaling
    double h_z_bound = 0.0;
    double h_z_given_x = 0.0;
    double sigma_at_ceiling = 0.0;  // fraction of sigma entries clamped at the ceiling
};

/// distortion(x, decode(mu + sigma.eps)) + beta * mi_bound, with the same K
/// noise draws feeding both terms. When `grads` is non-null it receives the
/// gradient of `total` for every tensor of `params` (CodecParams::tensors order).
///
/// h_z_bound is the entropy bound of the active regularizer: the pairwise
/// bound for the information-potential kind, h_z_given_x + mi_bound for the
/// parametric kind and h_z_given_x when no regularizer is active.
LossBreakdown total_loss(const Matrix& x, const CodecParams& params, const Regularizer& reg,
                         DistortionKind distortion, const NoiseBlock& noise,
                         const PartnerIndex& partners, std::vector<Matrix>* grads = nullptr);

}  // namespace ipae
