#include <cmath>

#include "ipae/checkpoint.hpp"
#include "ipae/errors.hpp"
#include "ipae/eval.hpp"
#include "ipae/io.hpp"

namespace ipae {

namespace {
constexpr std::uint64_t kEvalNoiseTag = 0xe7a1;
constexpr std::uint64_t kSampledCodeTag = 0xc0de;
constexpr std::uint64_t kProbeTag = 0x9b0e;

Matrix codes_for(const CodecParams& params, const Matrix& x, bool sampled, std::uint64_t seed) {
    GaussianCode code = encode(params, x);
    if (!sampled) return std::move(code.mu);
    Rng rng(seed);
    return reparameterize(code, NoiseBlock::draw(rng, code.batch(), 1, code.dim()));
}

nlohmann::json loss_json(const LossBreakdown& l) {
    return {{"total", l.total},
            {"distortion", l.distortion},
            {"mi_bound", l.mi_bound},
            {"h_z_bound", l.h_z_bound},
            {"h_z_given_x", l.h_z_given_x}};
}
}  // namespace

EvalReport evaluate(const CodecParams& params, const LabeledDataset& data, const TrainConfig& config,
                    const EvalOptions& opts) {
    data.validate();
    if (data.x.cols() != params.spec().input_dim) {
        throw ContractError("evaluate: data has " + std::to_string(data.x.cols()) + " columns, checkpoint expects " +
                            std::to_string(params.spec().input_dim));
    }
    if (data.size() == 0) throw ContractError("evaluate: empty dataset");

    EvalReport rep;
    rep.samples = data.size();
    rep.codes = codes_for(params, data.x, opts.sampled_codes, derive_seed(config.seed, kSampledCodeTag));
    rep.recon = decode(params, rep.codes);
    if (data.centers && data.centers->cols() == rep.recon.cols()) {
        rep.mean_distance = mean_distance_to_centers(rep.recon, data.labels, *data.centers);
    }
    if (rep.codes.rows() > 2) rep.pca = pca_project(rep.codes, 2);

    if (opts.probe_train != nullptr) {
        const Matrix train_codes = codes_for(params, opts.probe_train->x, opts.sampled_codes,
                                             derive_seed(config.seed, kSampledCodeTag + 1));
        ProbeOptions po;
        po.seed = derive_seed(config.seed, kProbeTag);
        rep.probe_error = linear_probe(train_codes, opts.probe_train->labels, rep.codes, data.labels, po);
    }

    Rng rng(derive_seed(config.seed, kEvalNoiseTag));
    const std::size_t n = data.size();
    Regularizer reg = config.reg;
    const NoiseBlock noise = NoiseBlock::draw(rng, n, reg.samples, params.spec().latent_dim);
    const PartnerIndex partners = PartnerIndex::draw(rng, n, std::min(reg.partners, n));
    reg.partners = partners.per_anchor();
    rep.loss = total_loss(data.x, params, reg, config.distortion, noise, partners);
    return rep;
}

std::string embeddings_to_csv(const EvalReport& report, const LabeledDataset& data) {
    const std::size_t d = report.codes.cols();
    std::string out = "sample_id,label,pc1,pc2";
    for (std::size_t c = 0; c < d; ++c) out += ",mu_" + std::to_string(c);
    out += '\n';
    const Matrix& p = report.pca.projection;
    for (std::size_t i = 0; i < report.codes.rows(); ++i) {
        out += std::to_string(i) + "," + std::to_string(data.labels[i]);
        for (std::size_t c = 0; c < 2; ++c) {
            out += ",";
            out += c < p.cols() && i < p.rows() ? format_double(p(i, c)) : "0";
        }
        for (std::size_t c = 0; c < d; ++c) out += "," + format_double(report.codes(i, c));
        out += '\n';
    }
    return out;
}

std::string recon_to_csv(const EvalReport& report, const LabeledDataset& data) {
    if (!data.centers || data.x.cols() != 2) {
        throw ContractError("recon_to_csv: requires two-dimensional data with centers");
    }
    std::string out = "sample_id,label,x0,x1,recon_x0,recon_x1,center_x0,center_x1\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::size_t l = data.labels[i];
        out += std::to_string(i) + "," + std::to_string(l) + "," + format_double(data.x(i, 0)) + "," +
               format_double(data.x(i, 1)) + "," + format_double(report.recon(i, 0)) + "," +
               format_double(report.recon(i, 1)) + "," + format_double((*data.centers)(l, 0)) + "," +
               format_double((*data.centers)(l, 1)) + "\n";
    }
    return out;
}

nlohmann::json report_to_json(const EvalReport& report, const TrainConfig& config) {
    nlohmann::json j{{"samples", report.samples},
                     {"kind", std::string(to_string(config.reg.kind))},
                     {"beta", config.reg.beta},
                     {"Nj", config.reg.partners},
                     {"loss", loss_json(report.loss)},
                     {"pca_variances", report.pca.variances}};
    if (report.mean_distance) j["E"] = *report.mean_distance;
    if (report.probe_error) j["probe_err"] = *report.probe_error;
    return j;
}

void write_run_outputs(const std::filesystem::path& dir, const TrainConfig& config, const TrainResult& result,
                       const EvalReport& report, const LabeledDataset& eval_data) {
    ensure_directory(dir);
    save_checkpoint(dir / "checkpoint.json", Checkpoint{result.params, config.seed, config.total_batches});
    write_file_atomic(dir / "metrics.csv", metrics_to_csv(result.metrics));
    write_file_atomic(dir / "report.json", report_to_json(report, config).dump(2) + "\n");
    write_file_atomic(dir / "embeddings.csv", embeddings_to_csv(report, eval_data));
    if (eval_data.centers && eval_data.x.cols() == 2) {
        write_file_atomic(dir / "recon.csv", recon_to_csv(report, eval_data));
    }
}

}  // namespace ipae
