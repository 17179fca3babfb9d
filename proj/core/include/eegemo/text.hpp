#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace eegemo {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

/// Splits one CSV line on commas (no quoting support; the formats written by
/// this library never need it).
std::vector<std::string_view> split_csv(std::string_view line);

/// Strict parses; throw ValidationError naming `what` on failure.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

/// Reads a whole file; throws IoError.
std::string read_text_file(const std::filesystem::path& path);
/// Writes a whole file; throws IoError.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

/// Splits text into lines, dropping a trailing '\r' and a final empty line.
std::vector<std::string_view> split_lines(std::string_view text);

}  // namespace eegemo
