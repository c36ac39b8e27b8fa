#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace gk {

/// Writes to a sibling temp file then renames over `path`.
void write_file_atomically(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace gk
