#include "ipae/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "ipae/checkpoint.hpp"
#include "ipae/config.hpp"
#include "ipae/datasets.hpp"
#include "ipae/errors.hpp"
#include "ipae/eval.hpp"
#include "ipae/io.hpp"
#include "ipae/kernels.hpp"
#include "ipae/train.hpp"

#ifndef IPAE_BUILD_ID
#define IPAE_BUILD_ID "unknown"
#endif

namespace ipae::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToyCsv = "toy.csv";
constexpr const char* kToyMeta = "toy.meta.json";
constexpr std::uint64_t kFallbackSplitTag = 0x5b17;

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
}

/// Resolved input data for one command.
struct DataBundle {
    LabeledDataset train;
    LabeledDataset eval;
    json fingerprints = json::object();
    bool has_separate_eval = false;
};

fs::path default_data_path(const TrainConfig& cfg) {
    const char* root = std::getenv("IPAE_DATA_DIR");
    if (root == nullptr) throw ContractError("no --data given and IPAE_DATA_DIR is not set");
    return cfg.codec.preset == "toy" ? fs::path(root) / kToyCsv : fs::path(root);
}

void add_fingerprint(json& fp, const fs::path& p) {
    fp[p.string()] = fnv1a64_hex(read_file(p));
}

DataBundle load_data(const TrainConfig& cfg, const std::optional<fs::path>& data_arg, std::ostream& err) {
    const fs::path path = data_arg ? *data_arg : default_data_path(cfg);
    DataBundle b;
    if (cfg.codec.preset == "toy") {
        if (!fs::is_regular_file(path)) throw IoError("toy data file '" + path.string() + "' not found");
        const LabeledDataset all = dataset_from_csv(read_file(path));
        add_fingerprint(b.fingerprints, path);
        if (cfg.holdout > 0.0) {
            auto parts = split(all, 1.0 - cfg.holdout, cfg.holdout, cfg.seed);
            b.train = std::move(parts.train);
            b.eval = std::move(parts.test);
            b.has_separate_eval = true;
        } else {
            b.train = all;
            b.eval = all;
        }
        return b;
    }

    if (!fs::is_directory(path)) throw IoError("MNIST directory '" + path.string() + "' not found");
    auto warn = [&](const std::string& m) { err << "warning: " << m << "\n"; };
    const fs::path tr_img = path / "train-images-idx3-ubyte";
    const fs::path tr_lab = path / "train-labels-idx1-ubyte";
    const fs::path te_img = path / "t10k-images-idx3-ubyte";
    const fs::path te_lab = path / "t10k-labels-idx1-ubyte";
    MnistSubsetOptions opts;
    LabeledDataset train_all = load_mnist_subset(tr_img, tr_lab, opts, warn);
    add_fingerprint(b.fingerprints, tr_img);
    add_fingerprint(b.fingerprints, tr_lab);
    if (fs::is_regular_file(te_img) && fs::is_regular_file(te_lab)) {
        MnistSubsetOptions test_opts;
        test_opts.max_n = std::numeric_limits<std::size_t>::max();
        b.eval = load_mnist_subset(te_img, te_lab, test_opts, warn);
        b.train = std::move(train_all);
        add_fingerprint(b.fingerprints, te_img);
        add_fingerprint(b.fingerprints, te_lab);
    } else {
        warn("test files absent; holding out 10% of the training subset");
        auto parts = split(train_all, 0.9, 0.1, derive_seed(cfg.seed, kFallbackSplitTag));
        b.train = std::move(parts.train);
        b.eval = std::move(parts.test);
    }
    b.has_separate_eval = true;
    return b;
}

json manifest(const std::string& command, const TrainConfig& cfg, const DataBundle& data,
              const std::vector<std::string>& outputs) {
    return json{{"command", command},
                {"config", config_to_json(cfg)},
                {"build", IPAE_BUILD_ID},
                {"kernels", std::string(kernels::active().name)},
                {"data", data.fingerprints},
                {"outputs", outputs},
                {"created_utc", utc_now()}};
}

TrainConfig read_config(const fs::path& p) { return config_from_string(read_file(p)); }

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::istringstream is(item);
        T v{};
        if (!(is >> v) || !is.eof()) throw ValidationError(flag, "bad list entry '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw ValidationError(flag, "list is empty");
    return out;
}

int cmd_gen_data(const fs::path& out_dir, std::uint64_t seed, std::ostream& out) {
    ensure_directory(out_dir);
    GmmOptions opts;
    const LabeledDataset ds = gen_gmm(seed, opts);
    write_file_atomic(out_dir / kToyCsv, dataset_to_csv(ds));
    json centers = json::array();
    for (std::size_t c = 0; c < ds.centers->rows(); ++c) centers.push_back({(*ds.centers)(c, 0), (*ds.centers)(c, 1)});
    const json meta{{"seed", seed},
                    {"rows", ds.size()},
                    {"components", ds.num_classes},
                    {"per_component", opts.per_component},
                    {"covariance", {{opts.variance, 0.0}, {0.0, opts.variance}}},
                    {"centers", centers}};
    write_file_atomic(out_dir / kToyMeta, meta.dump(2) + "\n");
    out << "wrote " << ds.size() << " rows to " << (out_dir / kToyCsv).string() << "\n";
    return kOk;
}

struct TrainArgs {
    std::string config;
    std::optional<std::string> data;
    std::string out;
    std::optional<std::size_t> log_every;
    bool record_time = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
    TrainConfig cfg = read_config(a.config);
    if (a.log_every) {
        cfg.log_every = *a.log_every;
        cfg.validate();
    }
    const fs::path dir = a.out;
    ensure_directory(dir);
    const DataBundle data = load_data(cfg, a.data ? std::optional<fs::path>(*a.data) : std::nullopt, err);
    write_file_atomic(dir / "manifest.json",
                      manifest("train", cfg, data, {"checkpoint.json", "metrics.csv", "report.json", "embeddings.csv"})
                              .dump(2) +
                          "\n");

    TrainHooks hooks;
    hooks.record_time = a.record_time;
    hooks.on_log = [&](const MetricsRow& r) {
        out << "step " << r.step << " total " << format_double(r.total) << " distortion "
            << format_double(r.distortion) << " mi_bound " << format_double(r.mi_bound) << "\n";
    };
    hooks.on_warning = [&](const std::string& m) { err << "warning: " << m << "\n"; };

    TrainResult result;
    try {
        result = train(cfg, data.train, hooks);
    } catch (const DivergenceError& e) {
        save_checkpoint(dir / "checkpoint.json", Checkpoint{e.last_good(), cfg.seed, e.step() - 1});
        err << "error: " << e.what() << "; last good checkpoint written\n";
        return kDiverged;
    }
    const EvalReport rep = evaluate(result.params, data.eval, cfg);
    write_run_outputs(dir, cfg, result, rep, data.eval);
    if (rep.mean_distance) out << "E " << format_double(*rep.mean_distance) << "\n";
    return kOk;
}

struct EvalArgs {
    std::string checkpoint;
    std::optional<std::string> data;
    std::optional<std::string> config;
    std::string out;
    bool probe = false;
    bool sampled = false;
    std::string split = "test";
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
    const Checkpoint ckpt = load_checkpoint(a.checkpoint);
    TrainConfig cfg;
    const fs::path sibling = fs::path(a.checkpoint).parent_path() / "manifest.json";
    if (a.config) {
        cfg = read_config(*a.config);
    } else if (fs::is_regular_file(sibling)) {
        json m;
        try {
            m = json::parse(read_file(sibling));
        } catch (const json::parse_error& e) {
            throw FormatError("manifest: " + std::string(e.what()));
        }
        if (!m.contains("config")) throw FormatError("manifest: missing config");
        cfg = config_from_json(m.at("config"));
    } else {
        cfg = ckpt.params.spec().preset == "mnist" ? TrainConfig::mnist() : TrainConfig::toy();
        cfg.seed = ckpt.seed;
    }
    cfg.codec = ckpt.params.spec();

    const DataBundle data = load_data(cfg, a.data ? std::optional<fs::path>(*a.data) : std::nullopt, err);
    const LabeledDataset* target = &data.eval;
    if (a.split == "train") target = &data.train;
    if (target->x.cols() != ckpt.params.spec().input_dim) {
        throw ContractError("checkpoint expects " + std::to_string(ckpt.params.spec().input_dim) +
                            " input columns, data has " + std::to_string(target->x.cols()));
    }
    EvalOptions eo;
    eo.sampled_codes = a.sampled;
    if (a.probe) eo.probe_train = &data.train;
    const EvalReport rep = evaluate(ckpt.params, *target, cfg, eo);

    const fs::path dir = a.out;
    ensure_directory(dir);
    write_file_atomic(dir / "embeddings.csv", embeddings_to_csv(rep, *target));
    if (target->centers && target->x.cols() == 2) write_file_atomic(dir / "recon.csv", recon_to_csv(rep, *target));
    write_file_atomic(dir / "report.json", report_to_json(rep, cfg).dump(2) + "\n");
    if (rep.mean_distance) out << "E " << format_double(*rep.mean_distance) << "\n";
    if (rep.probe_error) out << "probe_err " << format_double(*rep.probe_error) << "\n";
    return kOk;
}

struct SweepArgs {
    std::string config;
    std::optional<std::string> data;
    std::string betas;
    std::string njs = "";
    std::size_t repeats = 1;
    std::size_t jobs = 1;
    std::string out;
    bool probe = false;
    std::optional<std::size_t> log_every;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
    TrainConfig cfg = read_config(a.config);
    if (a.log_every) {
        cfg.log_every = *a.log_every;
        cfg.validate();
    }
    SweepOptions so;
    so.betas = parse_list<double>(a.betas, "betas");
    so.njs = a.njs.empty() ? std::vector<std::size_t>{cfg.reg.partners} : parse_list<std::size_t>(a.njs, "njs");
    for (double b : so.betas) {
        if (!(b >= 0.0)) throw ValidationError("betas", "entries must be >= 0");
    }
    for (std::size_t nj : so.njs) {
        if (nj < 1 || nj > cfg.batch_size) throw ValidationError("njs", "entries must lie in [1, batch_size]");
    }
    if (a.repeats < 1) throw ValidationError("repeats", "must be >= 1");
    so.repeats = a.repeats;
    so.jobs = a.jobs;
    so.probe = a.probe;
    const fs::path dir = a.out;
    ensure_directory(dir);
    so.run_dir = dir / "runs";

    const DataBundle data = load_data(cfg, a.data ? std::optional<fs::path>(*a.data) : std::nullopt, err);
    json m = manifest("sweep", cfg, data, {"sweep.csv", "sweep_summary.csv", "runs/"});
    m["sweep"] = {{"betas", so.betas}, {"njs", so.njs}, {"repeats", so.repeats}};
    write_file_atomic(dir / "manifest.json", m.dump(2) + "\n");

    so.on_run = [&](const SweepRow& r) {
        out << to_string(r.kind) << " beta " << format_double(r.beta) << " nj " << r.nj << " rep " << r.repeat
            << (r.ok ? " ok" : " FAILED: " + r.error) << "\n";
    };
    const auto rows = sweep(cfg, data.train, data.eval, so);
    write_file_atomic(dir / "sweep.csv", sweep_to_csv(rows));
    write_file_atomic(dir / "sweep_summary.csv", sweep_summary_to_csv(aggregate(rows)));
    const bool any_ok = std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.ok; });
    return any_ok ? kOk : kDiverged;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Information-potential and parametric mutual-information regularized auto-encoders"};
    app.name("ipae");
    app.require_subcommand(1);

    std::string gen_out;
    std::uint64_t gen_seed = 0;
    auto* gen = app.add_subcommand("gen-data", "Generate the 25-component Gaussian mixture toy data");
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--seed", gen_seed, "Random seed");

    TrainArgs ta;
    auto* tr = app.add_subcommand("train", "Train an auto-encoder from a JSON config");
    tr->add_option("--config", ta.config, "Config JSON file")->required();
    tr->add_option("--data", ta.data, "Toy CSV file or MNIST directory (default: $IPAE_DATA_DIR)");
    tr->add_option("--out", ta.out, "Output directory")->required();
    tr->add_option("--log-every", ta.log_every, "Override the config's log interval");
    tr->add_flag("--record-time", ta.record_time, "Fill the ms column of metrics.csv with wall-clock time");

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
    ev->add_option("--checkpoint", ea.checkpoint, "checkpoint.json")->required();
    ev->add_option("--data", ea.data, "Toy CSV file or MNIST directory (default: $IPAE_DATA_DIR)");
    ev->add_option("--config", ea.config, "Config JSON (default: manifest.json next to the checkpoint)");
    ev->add_option("--out", ea.out, "Output directory")->required();
    ev->add_flag("--probe", ea.probe, "Train and score a linear probe on the codes");
    ev->add_flag("--sampled", ea.sampled, "Use sampled codes mu + sigma*eps instead of mu");
    ev->add_option("--split", ea.split, "Which part to evaluate")->check(CLI::IsMember({"test", "train"}));

    SweepArgs sa;
    auto* sw = app.add_subcommand("sweep", "Run a beta x Nj x repeat grid");
    sw->add_option("--config", sa.config, "Base config JSON file")->required();
    sw->add_option("--data", sa.data, "Toy CSV file or MNIST directory (default: $IPAE_DATA_DIR)");
    sw->add_option("--betas", sa.betas, "Comma-separated beta values")->required();
    sw->add_option("--njs", sa.njs, "Comma-separated Nj values (default: the config's Nj)");
    sw->add_option("--repeats", sa.repeats, "Runs per cell, seeds base+0..base+repeats-1");
    sw->add_option("--jobs", sa.jobs, "Runs executed in parallel");
    sw->add_option("--out", sa.out, "Output directory")->required();
    sw->add_option("--log-every", sa.log_every, "Override the config's log interval");
    sw->add_flag("--probe", sa.probe, "Score a linear probe for every run");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kUsage;
    }

    try {
        if (*gen) return cmd_gen_data(gen_out, gen_seed, out);
        if (*tr) return cmd_train(ta, out, err);
        if (*ev) return cmd_eval(ea, out, err);
        if (*sw) return cmd_sweep(sa, out, err);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kIo;
    } catch (const NumericError& e) {
        err << "error: " << e.what() << "\n";
        return kDiverged;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}

}  // namespace ipae::cli
