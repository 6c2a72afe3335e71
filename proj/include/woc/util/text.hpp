#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace woc::util {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// Decimal representation with `digits` significant digits (printf %.Ng).
std::string format_significant(double value, int digits);

/// Parses a complete string as a double; returns false on trailing garbage.
bool parse_double(std::string_view text, double& out);
bool parse_u64(std::string_view text, std::uint64_t& out);

std::string_view trim(std::string_view text);
std::vector<std::string_view> split(std::string_view text, char sep);

/// Orders identifiers so that embedded digit runs compare numerically
/// ("n2" < "n10").
bool natural_less(std::string_view a, std::string_view b);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

/// RFC-4180 style field quoting: fields containing comma, quote, CR or LF
/// are wrapped in quotes with embedded quotes doubled.
std::string csv_field(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);

/// Splits one CSV record. Quoted fields may contain commas and doubled
/// quotes; embedded newlines are not supported by this reader.
std::vector<std::string> parse_csv_row(std::string_view line);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace woc::util
