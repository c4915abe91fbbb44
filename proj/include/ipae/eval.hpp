#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ipae/codec.hpp"
#include "ipae/config.hpp"
#include "ipae/datasets.hpp"
#include "ipae/objectives.hpp"
#include "ipae/train.hpp"

namespace ipae {

/// Mean Euclidean distance of each reconstruction to the center of its label.
double mean_distance_to_centers(const Matrix& recons, std::span<const std::size_t> labels,
                                const Matrix& centers);

struct PcaResult {
    Matrix projection;           // N x k
    Matrix components;           // k x d, rows are unit eigenvectors
    std::vector<double> variances;  // eigenvalues, descending
    std::vector<double> mean;    // column means subtracted before projection
};

/// Projects centered rows of z onto the top-k eigenvectors of the sample
/// covariance. Each component is signed so its largest-magnitude loading is
/// positive. When the covariance has rank below k only the non-degenerate
/// components are returned and `warn` is called.
PcaResult pca_project(const Matrix& z, std::size_t k,
                      const std::function<void(const std::string&)>& warn = {});

struct ProbeOptions {
    double lambda = 1e-4;
    std::size_t epochs = 50;
    double lr = 0.01;
    std::uint64_t seed = 0;
};

/// One-vs-rest linear SVM (L2-regularized hinge loss, SGD with
/// lr / (1 + lr * lambda * t) decay) on standardized features. Returns the
/// test misclassification rate. Throws ContractError with fewer than two classes.
double linear_probe(const Matrix& train_feats, std::span<const std::size_t> train_labels,
                    const Matrix& test_feats, std::span<const std::size_t> test_labels,
                    const ProbeOptions& opts = {});

struct EvalOptions {
    bool sampled_codes = false;  // use mu + sigma.eps instead of mu
    const LabeledDataset* probe_train = nullptr;  // enables the linear probe
};

struct EvalReport {
    std::size_t samples = 0;
    std::optional<double> mean_distance;  // E, when the data carries centers
    std::optional<double> probe_error;
    LossBreakdown loss;                   // objective terms on the evaluation data
    Matrix codes;                         // codes used for reconstruction and PCA
    Matrix recon;
    PcaResult pca;
};

/// Reconstructs with z = mu(x) (or a sampled code), then computes E, the 2-D
/// PCA of the codes, the probe error when requested, and the objective terms
/// on the evaluation set with noise seeded from config.seed.
EvalReport evaluate(const CodecParams& params, const LabeledDataset& data, const TrainConfig& config,
                    const EvalOptions& opts = {});

/// embeddings.csv: sample_id,label,pc1,pc2,mu_0..mu_{d-1}
std::string embeddings_to_csv(const EvalReport& report, const LabeledDataset& data);
/// recon.csv: sample_id,label,x0,x1,recon_x0,recon_x1,center_x0,center_x1 (2-D data with centers)
std::string recon_to_csv(const EvalReport& report, const LabeledDataset& data);
nlohmann::json report_to_json(const EvalReport& report, const TrainConfig& config);

// ---- sweeps -------------------------------------------------------------

struct SweepRow {
    RegularizerKind kind = RegularizerKind::InformationPotential;
    double beta = 0.0;
    std::size_t nj = 1;
    std::size_t repeat = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double mean_distance = std::numeric_limits<double>::quiet_NaN();
    double probe_error = std::numeric_limits<double>::quiet_NaN();
    double final_distortion = std::numeric_limits<double>::quiet_NaN();
    double final_mi_bound = std::numeric_limits<double>::quiet_NaN();
};

struct SweepCell {
    RegularizerKind kind;
    double beta;
    std::size_t nj;
    std::size_t completed = 0;
    std::size_t runs = 0;
    double mean_distance_mean = std::numeric_limits<double>::quiet_NaN();
    double mean_distance_std = std::numeric_limits<double>::quiet_NaN();
    double probe_error_mean = std::numeric_limits<double>::quiet_NaN();
    double probe_error_std = std::numeric_limits<double>::quiet_NaN();
};

struct SweepOptions {
    std::vector<double> betas;
    std::vector<std::size_t> njs;
    std::size_t repeats = 1;
    std::size_t jobs = 1;
    bool probe = false;
    /// When set, each run writes checkpoint/metrics/report into
    /// <run_dir>/<kind>_beta<b>_nj<n>/rep<r>.
    std::optional<std::filesystem::path> run_dir;
    std::function<void(const SweepRow&)> on_run;
};

/// Full factorial beta x Nj x repeat; repeat r uses seed base.seed + r.
/// A failed run is recorded (ok == false) and the sweep continues.
std::vector<SweepRow> sweep(const TrainConfig& base, const LabeledDataset& train_data,
                            const LabeledDataset& eval_data, const SweepOptions& opts);

/// Aggregates completed runs per (kind, beta, Nj); sample std (n - 1).
std::vector<SweepCell> aggregate(const std::vector<SweepRow>& rows);

/// sweep.csv: kind,beta,nj,repeat,seed,E,probe_err,final_distortion,final_mi_bound
std::string sweep_to_csv(const std::vector<SweepRow>& rows);
/// sweep_summary.csv: kind,beta,nj,runs,completed,E_mean,E_std,probe_err_mean,probe_err_std
std::string sweep_summary_to_csv(const std::vector<SweepCell>& cells);

/// Writes checkpoint.json, metrics.csv, report.json, embeddings.csv and (when
/// applicable) recon.csv for one finished run.
void write_run_outputs(const std::filesystem::path& dir, const TrainConfig& config, const TrainResult& result,
                       const EvalReport& report, const LabeledDataset& eval_data);

}  // namespace ipae
