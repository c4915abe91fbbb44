#include <algorithm>
#include <cstdio>
#include <map>

#include "ipae/datasets.hpp"
#include "ipae/errors.hpp"
#include "ipae/io.hpp"

namespace ipae {

namespace {

constexpr std::uint8_t kUnsignedByte = 0x08;

void put_be32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

std::uint32_t get_be32(const std::string& in, std::size_t pos) {
    auto b = [&](std::size_t i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])); };
    return (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
}

}  // namespace

std::string idx_to_bytes(const IdxArray& arr) {
    const auto& h = arr.header;
    if (((h.magic >> 8) & 0xff) != kUnsignedByte || (h.magic & 0xff) != h.dims.size() || (h.magic >> 16) != 0) {
        throw FormatError("idx: magic does not describe an unsigned-byte array of rank " +
                          std::to_string(h.dims.size()));
    }
    std::size_t count = 1;
    for (auto d : h.dims) count *= d;
    if (count != arr.data.size()) throw FormatError("idx: payload size does not match dims");
    std::string out;
    out.reserve(4 + 4 * h.dims.size() + arr.data.size());
    put_be32(out, h.magic);
    for (auto d : h.dims) put_be32(out, d);
    out.append(reinterpret_cast<const char*>(arr.data.data()), arr.data.size());
    return out;
}

IdxArray idx_from_bytes(const std::string& bytes) {
    if (bytes.size() < 4) throw IoError("idx: truncated header");
    IdxArray arr;
    arr.header.magic = get_be32(bytes, 0);
    const std::uint32_t magic = arr.header.magic;
    if ((magic >> 16) != 0 || ((magic >> 8) & 0xff) != kUnsignedByte) {
        char hex[11];
        std::snprintf(hex, sizeof hex, "0x%08x", static_cast<unsigned>(magic));
        throw FormatError(std::string("idx: bad magic ") + hex);
    }
    const std::size_t rank = magic & 0xff;
    if (rank == 0) throw FormatError("idx: rank 0");
    if (bytes.size() < 4 + 4 * rank) throw IoError("idx: truncated header");
    std::size_t count = 1;
    for (std::size_t i = 0; i < rank; ++i) {
        arr.header.dims.push_back(get_be32(bytes, 4 + 4 * i));
        count *= arr.header.dims.back();
    }
    const std::size_t offset = 4 + 4 * rank;
    if (bytes.size() - offset < count) {
        throw IoError("idx: truncated payload (" + std::to_string(bytes.size() - offset) + " of " +
                      std::to_string(count) + " bytes)");
    }
    arr.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                    bytes.begin() + static_cast<std::ptrdiff_t>(offset + count));
    return arr;
}

IdxArray read_idx(const std::filesystem::path& path) { return idx_from_bytes(read_file(path)); }

void write_idx(const std::filesystem::path& path, const IdxArray& arr) {
    write_file_atomic(path, idx_to_bytes(arr));
}

LabeledDataset load_mnist_subset(const std::filesystem::path& images_path,
                                 const std::filesystem::path& labels_path,
                                 const MnistSubsetOptions& opts,
                                 const std::function<void(const std::string&)>& warn) {
    if (opts.keep_digits.empty()) throw ContractError("load_mnist_subset: keep_digits is empty");
    const IdxArray images = read_idx(images_path);
    const IdxArray labels = read_idx(labels_path);
    if (images.header.magic != kIdxImageMagic || images.header.dims.size() != 3) {
        throw FormatError("load_mnist_subset: '" + images_path.string() + "' is not an IDX image file");
    }
    if (labels.header.magic != kIdxLabelMagic || labels.header.dims.size() != 1) {
        throw FormatError("load_mnist_subset: '" + labels_path.string() + "' is not an IDX label file");
    }
    const std::size_t n = images.header.dims[0];
    if (labels.header.dims[0] != n) throw FormatError("load_mnist_subset: image/label counts differ");
    const std::size_t pixels = std::size_t{images.header.dims[1]} * images.header.dims[2];

    std::vector<int> digits = opts.keep_digits;
    std::sort(digits.begin(), digits.end());
    digits.erase(std::unique(digits.begin(), digits.end()), digits.end());
    std::map<int, std::size_t> dense;
    for (std::size_t i = 0; i < digits.size(); ++i) dense[digits[i]] = i;

    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n && rows.size() < opts.max_n; ++i) {
        if (dense.count(labels.data[i]) != 0) rows.push_back(i);
    }
    if (rows.size() < opts.max_n && opts.max_n != std::numeric_limits<std::size_t>::max() && warn) {
        warn("load_mnist_subset: only " + std::to_string(rows.size()) + " rows match, requested " +
             std::to_string(opts.max_n));
    }

    LabeledDataset ds;
    ds.num_classes = digits.size();
    ds.x = Matrix(rows.size(), pixels);
    ds.labels.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::uint8_t* src = images.data.data() + rows[r] * pixels;
        double* dst = ds.x.data() + r * pixels;
        for (std::size_t p = 0; p < pixels; ++p) dst[p] = static_cast<double>(src[p]) / 255.0;
        ds.labels.push_back(dense[labels.data[rows[r]]]);
    }
    return ds;
}

}  // namespace ipae
