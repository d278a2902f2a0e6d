#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace summrec {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file, flushes, then renames over `path`.
// Readers see either the old or the new content, never a mix.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace summrec
