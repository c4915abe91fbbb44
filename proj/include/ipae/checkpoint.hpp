#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "ipae/codec.hpp"

namespace ipae {

/// Versioned JSON checkpoint: codec spec, seed, step and every parameter
/// tensor as {"shape": [rows, cols], "data": [row-major values]}.
struct Checkpoint {
    static constexpr int kVersion = 1;

    CodecParams params;
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
};

nlohmann::json codec_spec_to_json(const CodecSpec& spec);
/// Throws FormatError on missing or malformed fields.
CodecSpec codec_spec_from_json(const nlohmann::json& j);

std::string checkpoint_to_string(const Checkpoint& ckpt);
/// Throws FormatError on parse errors, version mismatch or inconsistent shapes.
Checkpoint checkpoint_from_string(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ipae
