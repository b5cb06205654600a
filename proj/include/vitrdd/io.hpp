#pragma once

#include <filesystem>
#include <string>

namespace vitrdd {

std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace vitrdd
