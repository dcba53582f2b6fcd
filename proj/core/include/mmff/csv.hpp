#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mmff {

// Shortest round-trip-safe enough text for 12 significant digits ("%.12g").
std::string format_number(double value);

std::vector<std::string> split_csv_line(std::string_view line);

// Parses a full double; returns false on trailing garbage or empty input.
bool parse_double(std::string_view text, double& out);

// Writes `contents` to `path`, creating parent directories. Throws IoError.
void write_text_file(const std::filesystem::path& path, std::string_view contents);
std::string read_text_file(const std::filesystem::path& path);

} // namespace mmff
