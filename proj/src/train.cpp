#include "ipae/train.hpp"

#include <chrono>
#include <cmath>
#include <mutex>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "ipae/errors.hpp"
#include "ipae/io.hpp"
#include "ipae/objectives.hpp"

namespace ipae {

namespace {
constexpr std::uint64_t kBatchStreamTag = 0xba7c4;
constexpr double kCeilingWarnFraction = 0.01;

// Activations of a 512 x 2048 layer are 8 MB. Left at glibc defaults these are
// mmapped and unmapped every step, and page faulting dominates system time.
void keep_large_blocks_on_heap() {
#if defined(__GLIBC__)
    static std::once_flag once;
    std::call_once(once, [] {
        mallopt(M_MMAP_THRESHOLD, 256 << 20);
        mallopt(M_TRIM_THRESHOLD, 512 << 20);
    });
#endif
}
}  // namespace

DivergenceError::DivergenceError(std::uint64_t step, CodecParams last_good, const std::string& detail)
    : std::runtime_error("training diverged at step " + std::to_string(step) + ": " + detail),
      step_(step),
      last_good_(std::move(last_good)) {}

TrainResult train(const TrainConfig& config, const LabeledDataset& data, const TrainHooks& hooks) {
    config.validate();
    data.validate();
    if (data.x.cols() != config.codec.input_dim) {
        throw ContractError("train: data has " + std::to_string(data.x.cols()) + " columns, codec '" +
                            config.codec.preset + "' expects " + std::to_string(config.codec.input_dim));
    }
    if (data.size() == 0) throw ContractError("train: empty dataset");

    keep_large_blocks_on_heap();
    Rng rng(config.seed);
    TrainResult res;
    res.params = CodecParams(config.codec);
    res.params.init_glorot(rng);
    res.adam.config.lr = config.lr;

    const auto clock_start = std::chrono::steady_clock::now();
    const bool ip = config.reg.kind == RegularizerKind::InformationPotential;
    const std::uint64_t batch_seed = derive_seed(config.seed, kBatchStreamTag);

    std::vector<std::vector<std::size_t>> epoch_batches;
    std::size_t cursor = 0;
    std::uint64_t epoch = 0;
    std::vector<Matrix> grads;

    for (std::uint64_t step = 1; step <= config.total_batches; ++step) {
        if (cursor == epoch_batches.size()) {
            epoch_batches = batches(data.size(), config.batch_size, batch_seed, epoch++);
            cursor = 0;
        }
        const auto& idx = epoch_batches[cursor++];
        const Matrix x = data.x.gather_rows(idx);
        const std::size_t n = x.rows();

        const NoiseBlock noise = NoiseBlock::draw(rng, n, config.reg.samples, config.codec.latent_dim);
        PartnerIndex partners;
        if (ip) partners = PartnerIndex::draw(rng, n, config.reg.partners);
        Regularizer reg = config.reg;
        if (ip) reg.partners = partners.per_anchor();

        LossBreakdown loss;
        try {
            loss = total_loss(x, res.params, reg, config.distortion, noise, partners, &grads);
        } catch (const NumericError& e) {
            throw DivergenceError(step, res.params, e.what());
        }
        if (!std::isfinite(loss.total)) throw DivergenceError(step, res.params, "non-finite loss");
        for (const Matrix& g : grads) {
            if (!g.all_finite()) throw DivergenceError(step, res.params, "non-finite gradient");
        }

        if (loss.sigma_at_ceiling > kCeilingWarnFraction) {
            ++res.warnings;
            if (hooks.on_warning) {
                hooks.on_warning("step " + std::to_string(step) + ": " +
                                 format_double(100.0 * loss.sigma_at_ceiling) +
                                 "% of sigma entries at the ceiling");
            }
        }

        if (step % config.log_every == 0 || step == config.total_batches) {
            MetricsRow row{step, loss.total, loss.distortion, loss.mi_bound, loss.h_z_bound, loss.h_z_given_x, 0.0};
            if (hooks.record_time) {
                row.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - clock_start).count();
            }
            res.metrics.push_back(row);
            if (hooks.on_log) hooks.on_log(row);
        }

        ConstParamRefs grad_refs(grads.begin(), grads.end());
        adam_step(res.params.tensors(), grad_refs, res.adam);
    }
    return res;
}

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
    std::string out = "step,total,distortion,mi_bound,h_z_bound,h_z_given_x,ms\n";
    for (const auto& r : rows) {
        out += std::to_string(r.step) + "," + format_double(r.total) + "," + format_double(r.distortion) + "," +
               format_double(r.mi_bound) + "," + format_double(r.h_z_bound) + "," +
               format_double(r.h_z_given_x) + "," + format_double(r.ms) + "\n";
    }
    return out;
}

}  // namespace ipae
