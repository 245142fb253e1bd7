#pragma once

#include <string>
#include <string_view>

namespace driftlab {

/// Writes `content` to a temporary file next to `path`, then renames it over
/// `path`. Readers see either the old file or the complete new one.
void write_file_atomic(const std::string& path, std::string_view content);

std::string read_file(const std::string& path);

}  // namespace driftlab
