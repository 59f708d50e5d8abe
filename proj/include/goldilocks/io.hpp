#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace goldilocks {

/// Deterministic number formatting for CSV output: %.12g, NaN always "nan".
std::string format_double(double value);

std::uint64_t fnv1a64(std::string_view data);

std::string hex64(std::uint64_t value);

/// UTC timestamp, ISO 8601.
std::string iso_timestamp_now();

void write_text_file(const std::string& path, const std::string& content);

std::string read_text_file(const std::string& path);

} // namespace goldilocks
