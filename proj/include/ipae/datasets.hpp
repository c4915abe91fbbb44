#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ipae/matrix.hpp"

namespace ipae {

struct LabeledDataset {
    Matrix x;
    std::vector<std::size_t> labels;
    std::size_t num_classes = 0;
    std::optional<Matrix> centers;  // true component means, GMM data only

    std::size_t size() const noexcept { return x.rows(); }
    /// Throws ContractError if labels and rows disagree or a label is out of range.
    void validate() const;
    LabeledDataset subset(std::span<const std::size_t> idx) const;
};

// ---- synthetic 25-component mixture -------------------------------------

struct GmmOptions {
    std::size_t grid = 5;             // grid x grid components
    double spacing = 2.0;             // centred on the origin
    double variance = 0.1;            // isotropic per-axis variance
    std::size_t per_component = 200;
};

/// Component c sits at (spacing * (c % grid - (grid-1)/2), spacing * (c / grid - (grid-1)/2)).
/// Rows are grouped by component, each drawn as center + sqrt(variance) * N(0, I).
LabeledDataset gen_gmm(std::uint64_t seed, const GmmOptions& opts = {});

/// CSV with header x0..x{d-1},label[,center_x0..]; line feeds only.
std::string dataset_to_csv(const LabeledDataset& ds);
/// Parses the format written by dataset_to_csv. Centers are rebuilt from the
/// center columns when present. Throws FormatError.
LabeledDataset dataset_from_csv(const std::string& text);

// ---- IDX container ------------------------------------------------------

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxHeader {
    std::uint32_t magic = 0;
    std::vector<std::uint32_t> dims;
};

struct IdxArray {
    IdxHeader header;
    std::vector<std::uint8_t> data;  // unsigned byte payload, row-major
};

/// Big-endian header, then raw bytes. Only the unsigned-byte element type is supported.
std::string idx_to_bytes(const IdxArray& arr);
/// Throws FormatError on a bad magic or element type, IoError on a short payload.
IdxArray idx_from_bytes(const std::string& bytes);
IdxArray read_idx(const std::filesystem::path& path);
void write_idx(const std::filesystem::path& path, const IdxArray& arr);

struct MnistSubsetOptions {
    std::vector<int> keep_digits = {1, 3, 4};
    std::size_t max_n = 18000;
};

/// Pixels scaled to [0, 1]; rows of kept digits in file order, truncated to
/// max_n; labels re-indexed densely in ascending digit order. When fewer than
/// max_n rows match, all are returned and `warn` (if set) receives a message.
LabeledDataset load_mnist_subset(const std::filesystem::path& images,
                                 const std::filesystem::path& labels,
                                 const MnistSubsetOptions& opts = {},
                                 const std::function<void(const std::string&)>& warn = {});

// ---- splitting and batching ---------------------------------------------

struct SplitResult {
    LabeledDataset train;
    LabeledDataset test;
};

/// Stratified split: each class is shuffled with the seed and cut at
/// round(train_fraction * count). Retained rows keep their original order.
/// Throws ContractError if fractions do not sum to 1 or a part is empty.
SplitResult split(const LabeledDataset& ds, double train_fraction, double test_fraction,
                  std::uint64_t seed);

/// Seeded per-epoch shuffle of [0, n) cut into batches; the short tail batch is kept.
std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size,
                                              std::uint64_t seed, std::uint64_t epoch);

}  // namespace ipae
