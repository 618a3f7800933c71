#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mango::io {

// Writes to a sibling temp file, then renames over `path`. Parent must exist.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

void append_file(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

// Splits on '\n', dropping a trailing '\r' on each line. A final empty line is not returned.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Non-empty, non-'#' lines, trimmed. Used for seed and blocklist files.
std::vector<std::string> read_list_file(const std::filesystem::path& path);

}  // namespace mango::io
