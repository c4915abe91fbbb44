#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "ipae/codec.hpp"
#include "ipae/objectives.hpp"

namespace ipae {

/// Everything that determines a training run.
struct TrainConfig {
    CodecSpec codec = CodecSpec::toy();
    Regularizer reg;
    DistortionKind distortion = DistortionKind::Mse;
    double lr = 1e-3;
    std::size_t batch_size = 512;
    std::size_t total_batches = 5000;
    std::uint64_t seed = 0;
    std::size_t log_every = 100;
    /// Fraction of a single-file dataset held out for evaluation (stratified split).
    double holdout = 0.2;

    /// Defaults of the toy mixture protocol: MSE distortion.
    static TrainConfig toy();
    /// Defaults of the digit-subset protocol: Bernoulli distortion, no holdout
    /// (the separate test files are used).
    static TrainConfig mnist();

    /// Throws ValidationError naming the first offending field.
    void validate() const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Keys: preset, hidden_dim, latent_dim, regularizer, beta, K, Nj, distortion,
/// lr, batch_size, total_batches, seed, log_every, holdout. Missing keys take
/// the preset's defaults; unknown keys are rejected.
TrainConfig config_from_json(const nlohmann::json& j);
TrainConfig config_from_string(const std::string& text);
nlohmann::json config_to_json(const TrainConfig& cfg);

}  // namespace ipae
