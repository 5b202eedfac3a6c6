#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>

namespace gyrocal {

// Shortest text form that parses back to the identical double.
std::string format_double(double v);
double parse_double(std::string_view s, std::string_view context);

std::uint32_t crc32(std::span<const unsigned char> bytes, std::uint32_t seed = 0);
std::uint32_t crc32(std::string_view text);
std::string hex32(std::uint32_t v);
std::string file_crc32(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

// `key=value` lines; blank lines and lines starting with '#' are ignored.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::string_view text);
std::string format_key_values(const KeyValues& kv);

// Header comment carried by every generated CSV/text artifact.
std::string provenance_comment(std::string_view config_hash, std::uint64_t seed);

}  // namespace gyrocal
