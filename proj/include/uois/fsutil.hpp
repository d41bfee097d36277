#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace uois {

// Writes to a sibling temp file and renames over `path`; parent directories
// are created.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

// zlib crc32 as 8 lower-case hex digits.
std::string crc32_hex(std::string_view bytes);

}  // namespace uois
