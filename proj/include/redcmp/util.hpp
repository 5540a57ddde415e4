#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace redcmp {

// Shortest representation that round-trips the exact double.
std::string format_double(double v);

double parse_double(std::string_view s);
std::uint64_t parse_u64(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

// Whole-file text IO in binary mode so artifacts are byte-stable.
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

// FNV-1a over bytes; used for config hashes.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace redcmp
