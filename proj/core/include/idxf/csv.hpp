#pragma once

// Small text helpers shared by the CSV readers and writers.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace idxf::csv {

std::vector<std::string> split_row(std::string_view line);

std::string_view trim(std::string_view s);

/// Parses a double from the whole of `s`; returns false on junk or trailing characters.
bool parse_double(std::string_view s, double& out);

/// Shortest decimal form that parses back to the identical double.
std::string format_exact(double v);

/// Writes `contents` to a sibling temp file, then renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

std::string read_file(const std::filesystem::path& path);

std::vector<std::string> read_lines(const std::filesystem::path& path);

} // namespace idxf::csv
