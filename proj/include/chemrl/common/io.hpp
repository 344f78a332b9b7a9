// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace chemrl {

// Writes `content` to `<path>.tmp` and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

// Splits one CSV line. Supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);

// Quotes a field if it contains a comma, quote, or newline.
std::string csv_field(std::string_view value);

// Shortest round-trippable text form of a double.
std::string format_double(double value);

// Directory holding the shipped data tables: $CHEMRL_DATA_DIR if set,
// otherwise the directory compiled into the build.
std::filesystem::path data_dir();

}  // namespace chemrl
