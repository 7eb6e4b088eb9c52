#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace tradescan::io {

// Writes the whole file; throws IoError on failure.
void write_file(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace tradescan::io
