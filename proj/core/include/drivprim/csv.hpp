#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace drivprim::csv {

// Minimal CSV helpers for the numeric files this project reads and writes.
// Fields are never quoted; identifiers must not contain commas.

std::vector<std::string_view> split(std::string_view line, char sep = ',');

std::string_view trim(std::string_view s);

/// Strict full-field parse; nullopt on blank, partial or non-finite input.
std::optional<double> parse_double(std::string_view field);
std::optional<long long> parse_int(std::string_view field);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

/// Reads a whole text file; throws std::runtime_error if it cannot be opened.
std::string read_file(const std::string& path);

/// Writes (truncating) a text file; throws std::runtime_error on failure.
void write_file(const std::string& path, std::string_view contents);

/// Splits on '\n', tolerating a trailing newline and stripping '\r'.
std::vector<std::string_view> lines(std::string_view text);

}  // namespace drivprim::csv
