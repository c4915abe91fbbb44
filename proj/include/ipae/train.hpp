#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipae/codec.hpp"
#include "ipae/config.hpp"
#include "ipae/datasets.hpp"
#include "ipae/nn.hpp"

namespace ipae {

struct MetricsRow {
    std::uint64_t step = 0;
    double total = 0.0;
    double distortion = 0.0;
    double mi_bound = 0.0;
    double h_z_bound = 0.0;
    double h_z_given_x = 0.0;
    double ms = 0.0;

    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

/// Thrown when the loss becomes non-finite. Carries the parameters from
/// before the failing step.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::uint64_t step, CodecParams last_good, const std::string& detail);
    std::uint64_t step() const noexcept { return step_; }
    const CodecParams& last_good() const noexcept { return last_good_; }

private:
    std::uint64_t step_;
    CodecParams last_good_;
};

struct TrainHooks {
    std::function<void(const MetricsRow&)> on_log;
    std::function<void(const std::string&)> on_warning;
    /// Fill MetricsRow::ms with elapsed wall-clock time. Off by default so
    /// that the metrics log is a pure function of config and data.
    bool record_time = false;
};

struct TrainResult {
    CodecParams params;
    AdamState adam;
    std::vector<MetricsRow> metrics;
    std::size_t warnings = 0;
};

/// Runs config.total_batches Adam steps on total_loss over seeded shuffled
/// minibatches. The run's random stream is consumed as: parameter init, then
/// per step the noise block followed by the partner draw.
TrainResult train(const TrainConfig& config, const LabeledDataset& data, const TrainHooks& hooks = {});

/// metrics.csv: step,total,distortion,mi_bound,h_z_bound,h_z_given_x,ms
std::string metrics_to_csv(const std::vector<MetricsRow>& rows);

}  // namespace ipae
