#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "ipae/datasets.hpp"
#include "ipae/errors.hpp"
#include "ipae/io.hpp"

using namespace ipae;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("ipae_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

IdxArray synthetic_images(const std::vector<std::uint8_t>& labels, std::size_t side) {
    IdxArray a;
    a.header.magic = kIdxImageMagic;
    a.header.dims = {static_cast<std::uint32_t>(labels.size()), static_cast<std::uint32_t>(side),
                     static_cast<std::uint32_t>(side)};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t p = 0; p < side * side; ++p) a.data.push_back(static_cast<std::uint8_t>((i * 7 + p) % 256));
    }
    return a;
}

IdxArray label_file(const std::vector<std::uint8_t>& labels) {
    IdxArray a;
    a.header.magic = kIdxLabelMagic;
    a.header.dims = {static_cast<std::uint32_t>(labels.size())};
    a.data = labels;
    return a;
}

}  // namespace

TEST_CASE("gmm: sizes, per-component statistics, determinism") {
    const auto ds = gen_gmm(0);
    REQUIRE(ds.size() == 5000);
    REQUIRE(ds.centers.has_value());
    CHECK(ds.centers->rows() == 25);
    CHECK(ds.num_classes == 25);
    std::vector<std::size_t> count(25, 0);
    std::vector<double> sx(25, 0.0), sy(25, 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        ++count[ds.labels[i]];
        sx[ds.labels[i]] += ds.x(i, 0);
        sy[ds.labels[i]] += ds.x(i, 1);
    }
    std::set<std::pair<double, double>> grid;
    for (std::size_t c = 0; c < 25; ++c) {
        CHECK(count[c] == 200);
        const double mx = sx[c] / 200.0, my = sy[c] / 200.0;
        CHECK(std::abs(mx - (*ds.centers)(c, 0)) < 0.1);
        CHECK(std::abs(my - (*ds.centers)(c, 1)) < 0.1);
        double vx = 0.0, vy = 0.0;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (ds.labels[i] != c) continue;
            vx += (ds.x(i, 0) - mx) * (ds.x(i, 0) - mx);
            vy += (ds.x(i, 1) - my) * (ds.x(i, 1) - my);
        }
        CHECK(vx / 199.0 > 0.07);
        CHECK(vx / 199.0 < 0.13);
        CHECK(vy / 199.0 > 0.07);
        CHECK(vy / 199.0 < 0.13);
        grid.insert({(*ds.centers)(c, 0), (*ds.centers)(c, 1)});
    }
    CHECK(grid.size() == 25);
    for (auto [x, y] : grid) {
        CHECK(std::abs(x) <= 4.0);
        CHECK(std::abs(y) <= 4.0);
    }
    CHECK(gen_gmm(0).x == ds.x);
    CHECK_FALSE(gen_gmm(1).x == ds.x);
}

TEST_CASE("toy csv round trip") {
    GmmOptions opts;
    opts.per_component = 3;
    const auto ds = gen_gmm(5, opts);
    const auto back = dataset_from_csv(dataset_to_csv(ds));
    CHECK(back.x == ds.x);
    CHECK(back.labels == ds.labels);
    CHECK(back.num_classes == 25);
    REQUIRE(back.centers.has_value());
    CHECK(*back.centers == *ds.centers);
    CHECK_THROWS(dataset_from_csv("x0,x1,label\n1,2\n"));
}

TEST_CASE("idx round trip and error classes") {
    const auto img = synthetic_images({1, 2, 3}, 4);
    const auto bytes = idx_to_bytes(img);
    const auto back = idx_from_bytes(bytes);
    CHECK(back.header.magic == img.header.magic);
    CHECK(back.header.dims == img.header.dims);
    CHECK(back.data == img.data);

    std::string bad = bytes;
    bad[2] = 0x09;  // signed-byte type code, unsupported
    CHECK_THROWS_AS(idx_from_bytes(bad), FormatError);
    CHECK_THROWS_AS(idx_from_bytes(bytes.substr(0, bytes.size() - 5)), IoError);
    CHECK_THROWS_AS(idx_from_bytes(bytes.substr(0, 2)), IoError);
}

TEST_CASE("mnist subset: filtering, scaling, relabelling and the short-file warning") {
    const auto dir = temp_dir("mnist");
    const std::vector<std::uint8_t> labels{0, 1, 3, 4, 9, 1, 3, 2, 4, 4};
    write_idx(dir / "img", synthetic_images(labels, 28));
    write_idx(dir / "lab", label_file(labels));

    std::vector<std::string> warnings;
    MnistSubsetOptions opts;
    const auto ds = load_mnist_subset(dir / "img", dir / "lab", opts, [&](const std::string& w) { warnings.push_back(w); });
    CHECK(ds.size() == 7);
    CHECK(ds.x.cols() == 784);
    CHECK(ds.labels == std::vector<std::size_t>{0, 1, 2, 0, 1, 2, 2});
    CHECK(ds.num_classes == 3);
    CHECK(warnings.size() == 1);
    for (double v : ds.x.flat()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    // Row 1 of the file is the first kept row; pixel p holds (1*7 + p) % 256.
    CHECK(ds.x(0, 0) == 7.0 / 255.0);

    opts.max_n = 3;
    warnings.clear();
    const auto capped = load_mnist_subset(dir / "img", dir / "lab", opts, [&](const std::string& w) { warnings.push_back(w); });
    CHECK(capped.size() == 3);
    CHECK(warnings.empty());

    opts.keep_digits = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    opts.max_n = std::numeric_limits<std::size_t>::max();
    CHECK(load_mnist_subset(dir / "img", dir / "lab", opts).size() == 10);

    CHECK_THROWS_AS(load_mnist_subset(dir / "lab", dir / "lab"), FormatError);
    CHECK_THROWS_AS(load_mnist_subset(dir / "missing", dir / "lab"), IoError);
    fs::remove_all(dir);
}

TEST_CASE("split: sizes, stratification, determinism, empty parts") {
    const auto ds = gen_gmm(0);
    const auto s = split(ds, 0.8, 0.2, 3);
    CHECK(s.train.size() == 4000);
    CHECK(s.test.size() == 1000);
    std::vector<int> per(25, 0);
    for (auto l : s.test.labels) ++per[l];
    for (int c : per) CHECK(c == 40);
    const auto again = split(ds, 0.8, 0.2, 3);
    CHECK(again.train.x == s.train.x);
    CHECK(again.test.labels == s.test.labels);
    CHECK(s.test.centers.has_value());
    CHECK_THROWS_AS(split(ds, 1.0, 0.0, 3), ContractError);
}

TEST_CASE("batches cover every row once per epoch") {
    const auto b = batches(5000, 512, 7, 0);
    REQUIRE(b.size() == 10);
    CHECK(b.back().size() == 392);
    std::vector<int> seen(5000, 0);
    for (const auto& batch : b) {
        for (auto i : batch) ++seen[i];
    }
    for (int c : seen) CHECK(c == 1);
    CHECK(batches(5000, 512, 7, 0) == b);
    CHECK_FALSE(batches(5000, 512, 7, 1) == b);
}

TEST_CASE("io helpers") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(std::nan("")) == "nan");
    CHECK(fnv1a64_hex("") == "cbf29ce484222325");
    CHECK(fnv1a64_hex("a") == "af63dc4c8601ec8c");
    const auto dir = temp_dir("io");
    write_file_atomic(dir / "f.txt", "hello");
    CHECK(read_file(dir / "f.txt") == "hello");
    CHECK_THROWS_AS(read_file(dir / "nope.txt"), IoError);
    fs::remove_all(dir);
}
