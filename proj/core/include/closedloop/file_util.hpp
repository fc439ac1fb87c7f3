#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace closedloop {

/// Writes through a temporary sibling file and renames it into place, so
/// readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace closedloop
