#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace loec {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames it over `path`, so readers never
/// observe a partially written file. Parent directories are created.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

/// RFC-4180 field quoting: quoted only when the field holds a comma, quote,
/// CR or LF; embedded quotes are doubled.
std::string csv_field(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);
/// Parses RFC-4180 text into rows of fields. E_FORMAT on unterminated quotes.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Shortest round-trippable decimal for a double.
std::string format_double(double v);

}  // namespace loec
