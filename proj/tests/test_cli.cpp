#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ipae/checkpoint.hpp"
#include "ipae/cli.hpp"
#include "ipae/io.hpp"

using namespace ipae;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "ipae");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class TempDir {
public:
    explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("ipae_cli_" + name)) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path operator/(const std::string& s) const { return path_ / s; }
    std::string str(const std::string& s) const { return (path_ / s).string(); }

private:
    fs::path path_;
};

const char* kTinyConfig = R"({"preset":"toy","hidden_dim":32,"latent_dim":4,"regularizer":"ipae",
  "beta":0.001,"batch_size":64,"total_batches":20,"log_every":10})";

}  // namespace

TEST_CASE("help and usage errors") {
    const auto help = run({"--help"});
    CHECK(help.code == cli::kOk);
    CHECK(help.out.find("train") != std::string::npos);
    CHECK(run({}).code == cli::kUsage);
    CHECK(run({"bogus"}).code == cli::kUsage);
    CHECK(run({"train", "--config"}).code == cli::kUsage);
}

TEST_CASE("gen-data writes the mixture and its metadata") {
    TempDir d("gen");
    REQUIRE(run({"gen-data", "--out", d.str("data"), "--seed", "3"}).code == cli::kOk);
    const std::string csv = read_file(d / "data/toy.csv");
    CHECK(csv.rfind("x0,x1,label", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5001);
    const auto meta = nlohmann::json::parse(read_file(d / "data/toy.meta.json"));
    CHECK(meta["seed"] == 3);
    CHECK(meta["centers"].size() == 25);
    CHECK(meta["per_component"] == 200);
    CHECK(meta["covariance"][0][0] == 0.1);
}

TEST_CASE("train, eval and reproducibility through the command line") {
    TempDir d("train");
    REQUIRE(run({"gen-data", "--out", d.str("data")}).code == cli::kOk);
    write_file_atomic(d / "cfg.json", kTinyConfig);

    const auto t1 = run({"train", "--config", d.str("cfg.json"), "--data", d.str("data/toy.csv"), "--out", d.str("r1")});
    REQUIRE(t1.code == cli::kOk);
    for (const char* f : {"manifest.json", "checkpoint.json", "metrics.csv", "report.json", "embeddings.csv", "recon.csv"}) {
        CHECK(fs::exists(d / (std::string("r1/") + f)));
    }
    const auto manifest = nlohmann::json::parse(read_file(d / "r1/manifest.json"));
    CHECK(manifest["config"]["beta"] == 0.001);
    CHECK(manifest["data"].size() == 1);
    CHECK(nlohmann::json::parse(read_file(d / "r1/report.json")).contains("E"));

    REQUIRE(run({"train", "--config", d.str("cfg.json"), "--data", d.str("data/toy.csv"), "--out", d.str("r2")}).code ==
            cli::kOk);
    CHECK(read_file(d / "r1/metrics.csv") == read_file(d / "r2/metrics.csv"));
    CHECK(read_file(d / "r1/checkpoint.json") == read_file(d / "r2/checkpoint.json"));

    const auto ev = run({"eval", "--checkpoint", d.str("r1/checkpoint.json"), "--data", d.str("data/toy.csv"), "--out",
                         d.str("ev"), "--probe"});
    REQUIRE(ev.code == cli::kOk);
    CHECK(read_file(d / "ev/embeddings.csv").rfind("sample_id,label,pc1,pc2,mu_0", 0) == 0);
    const auto rep = nlohmann::json::parse(read_file(d / "ev/report.json"));
    CHECK(rep.contains("probe_err"));
    // eval reuses the training manifest, so E matches the training report.
    CHECK(rep["E"] == nlohmann::json::parse(read_file(d / "r1/report.json"))["E"]);

    SUBCASE("corrupt checkpoint") {
        std::string text = read_file(d / "r1/checkpoint.json");
        write_file_atomic(d / "bad.json", text.substr(0, text.size() / 3));
        const auto bad = run({"eval", "--checkpoint", d.str("bad.json"), "--data", d.str("data/toy.csv"), "--out", d.str("ev2")});
        CHECK(bad.code != cli::kOk);
        CHECK(bad.err.find("checkpoint") != std::string::npos);
    }
    SUBCASE("dimension mismatch") {
        write_file_atomic(d / "wide.csv", "x0,x1,x2,label\n1,2,3,0\n4,5,6,0\n7,8,9,0\n");
        const auto mm = run({"eval", "--checkpoint", d.str("r1/checkpoint.json"), "--data", d.str("wide.csv"), "--out",
                             d.str("ev3"), "--config", d.str("cfg.json")});
        CHECK(mm.code == cli::kUsage);
    }
}

TEST_CASE("invalid configs and missing files map to distinct exit codes") {
    TempDir d("errors");
    REQUIRE(run({"gen-data", "--out", d.str("data")}).code == cli::kOk);
    write_file_atomic(d / "neg.json", R"({"preset":"toy","beta":-1})");
    const auto neg = run({"train", "--config", d.str("neg.json"), "--data", d.str("data/toy.csv"), "--out", d.str("o")});
    CHECK(neg.code == cli::kUsage);
    CHECK(neg.err.find("beta") != std::string::npos);

    write_file_atomic(d / "cfg.json", kTinyConfig);
    const auto missing = run({"train", "--config", d.str("cfg.json"), "--data", d.str("nope.csv"), "--out", d.str("o")});
    CHECK(missing.code == cli::kIo);
    CHECK(run({"train", "--config", d.str("nope.json"), "--data", d.str("data/toy.csv"), "--out", d.str("o")}).code ==
          cli::kIo);
}

TEST_CASE("divergence exits with its own code and leaves a checkpoint") {
    TempDir d("diverge");
    write_file_atomic(d / "cfg.json", kTinyConfig);
    std::string csv = "x0,x1,label\n";
    for (int i = 0; i < 100; ++i) csv += "1e300,-1e300,0\n";
    write_file_atomic(d / "huge.csv", csv);
    const auto r = run({"train", "--config", d.str("cfg.json"), "--data", d.str("huge.csv"), "--out", d.str("o")});
    CHECK(r.code == cli::kDiverged);
    CHECK(r.err.find("step 1") != std::string::npos);
    REQUIRE(fs::exists(d / "o/checkpoint.json"));
    CHECK(load_checkpoint(d / "o/checkpoint.json").step == 0);
}

TEST_CASE("sweep writes per-run rows and a summary") {
    TempDir d("sweep");
    REQUIRE(run({"gen-data", "--out", d.str("data")}).code == cli::kOk);
    write_file_atomic(d / "cfg.json", kTinyConfig);
    const auto s = run({"sweep", "--config", d.str("cfg.json"), "--data", d.str("data/toy.csv"), "--betas", "0.001,0.1",
                        "--njs", "1,2", "--repeats", "2", "--out", d.str("sw")});
    REQUIRE(s.code == cli::kOk);
    const std::string rows = read_file(d / "sw/sweep.csv");
    CHECK(std::count(rows.begin(), rows.end(), '\n') == 9);
    const std::string summary = read_file(d / "sw/sweep_summary.csv");
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 5);
    CHECK(fs::exists(d / "sw/manifest.json"));
    CHECK(run({"sweep", "--config", d.str("cfg.json"), "--data", d.str("data/toy.csv"), "--betas", "x", "--out",
               d.str("sw2")})
              .code == cli::kUsage);
}

TEST_CASE("the installed binary reports the same exit codes") {
    const std::string bin = IPAE_CLI_PATH;
    CHECK(std::system((bin + " --help > /dev/null").c_str()) == 0);
    const int rc = std::system((bin + " train --config /nonexistent.json --out /tmp/x 2> /dev/null").c_str());
    CHECK(WEXITSTATUS(rc) == cli::kIo);
}
