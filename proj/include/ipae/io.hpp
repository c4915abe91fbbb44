#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace ipae {

/// Writes to a sibling temp file, then renames over `path`. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Throws IoError when the file cannot be opened or read.
std::string read_file(const std::filesystem::path& path);

/// 64-bit FNV-1a over the bytes, as 16 lowercase hex digits.
std::string fnv1a64_hex(std::string_view bytes);

/// Shortest round-trip decimal form ("nan"/"inf" for non-finite values).
std::string format_double(double v);

void ensure_directory(const std::filesystem::path& dir);

}  // namespace ipae
