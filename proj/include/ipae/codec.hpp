#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "ipae/matrix.hpp"
#include "ipae/nn.hpp"
#include "ipae/rng.hpp"

namespace ipae {

inline constexpr double kSigmaFloor = 1e-4;
inline constexpr double kSigmaCeil = 1e3;

/// Shape of the encoder/decoder pair: one hidden layer on each side, two
/// linear heads (mean and log-variance) on the encoder.
struct CodecSpec {
    std::string preset = "toy";
    std::size_t input_dim = 2;
    std::size_t hidden_dim = 2048;
    std::size_t latent_dim = 16;
    Activation hidden_act = Activation::Relu;
    Activation output_act = Activation::Identity;

    static CodecSpec toy();
    static CodecSpec mnist();
    /// "toy" or "mnist"; throws ContractError otherwise.
    static CodecSpec from_preset(std::string_view name);

    friend bool operator==(const CodecSpec&, const CodecSpec&) = default;
};

/// Per-sample p(z|x) = N(mu, diag(sigma^2)).
struct GaussianCode {
    Matrix mu;
    Matrix sigma;

    std::size_t batch() const noexcept { return mu.rows(); }
    std::size_t dim() const noexcept { return mu.cols(); }
    /// Throws ShapeError/NumericError unless shapes agree and sigma is finite and >= floor.
    void validate() const;
};

/// Standard-normal draws for K samples per row: row i*K + k holds eps_{i,k}.
struct NoiseBlock {
    std::size_t samples_per_row = 1;
    Matrix eps;

    std::size_t batch() const noexcept {
        return samples_per_row == 0 ? 0 : eps.rows() / samples_per_row;
    }
    static NoiseBlock draw(Rng& rng, std::size_t batch, std::size_t k, std::size_t dim);
    static NoiseBlock zeros(std::size_t batch, std::size_t k, std::size_t dim);
};

class CodecParams {
public:
    static constexpr std::size_t kLayerCount = 5;
    static constexpr std::array<std::string_view, kLayerCount> kLayerNames = {
        "enc.h", "enc.mu", "enc.logvar", "dec.h", "dec.out"};

    CodecParams() = default;
    explicit CodecParams(const CodecSpec& spec);

    const CodecSpec& spec() const noexcept { return spec_; }

    DenseLayer enc_hidden;
    DenseLayer enc_mu;
    DenseLayer enc_logvar;
    DenseLayer dec_hidden;
    DenseLayer dec_out;

    void init_glorot(Rng& rng);
    void zero();

    std::array<DenseLayer*, kLayerCount> layers() noexcept;
    std::array<const DenseLayer*, kLayerCount> layers() const noexcept;

    /// W then b for each layer, in kLayerNames order.
    ParamRefs tensors();
    ConstParamRefs tensors() const;
    /// Names matching tensors(): "enc.h.W", "enc.h.b", ...
    static std::vector<std::string> tensor_names();

    /// A zero-filled set of tensors shaped like this model; used for gradients.
    std::vector<Matrix> zeros_like() const;

    friend bool operator==(const CodecParams& a, const CodecParams& b);

private:
    CodecSpec spec_;
};

/// Intermediate values of one encoder pass, kept for the backward pass.
struct EncodeCache {
    Matrix hidden;
    Matrix logvar;
    GaussianCode code;
};

struct DecodeCache {
    Matrix hidden;
    Matrix output;
};

EncodeCache encode_cached(const CodecParams& params, const Matrix& x);
GaussianCode encode(const CodecParams& params, const Matrix& x);

/// z[i*K + k] = mu_i + sigma_i .* eps_{i,k}.
Matrix reparameterize(const GaussianCode& code, const NoiseBlock& noise);

DecodeCache decode_cached(const CodecParams& params, const Matrix& z);
Matrix decode(const CodecParams& params, const Matrix& z);

}  // namespace ipae
