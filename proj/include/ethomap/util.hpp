#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ethomap::util {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Strict full-token parse; nullopt on empty or trailing garbage. Accepts nan/inf.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

std::string read_file(const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Little-endian float32 blobs.
void write_f32(const std::filesystem::path& path, const std::vector<float>& values);
std::vector<float> read_f32(const std::filesystem::path& path);

/// Number of workers to use when the caller passes 0.
unsigned default_threads();

} // namespace ethomap::util
