#pragma once

// Small line-oriented parsing helpers shared by the file formats.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace doorkin::text {

/// Splits on ASCII whitespace, dropping empty tokens.
std::vector<std::string_view> split_ws(std::string_view line);

std::string_view trim(std::string_view s);

/// Strict numeric parsing: the whole token must be consumed. Throw Error(kParse).
double parse_double(std::string_view token);
std::int64_t parse_int(std::string_view token);
std::uint64_t parse_uint(std::string_view token);

/// 64-bit FNV-1a over the raw bytes.
std::uint64_t fnv1a64(std::string_view bytes);

/// Lowercase, zero-padded 16-digit hex.
std::string hex64(std::uint64_t value);

/// splitmix64 finalizer, used to derive independent seeds from a base seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace doorkin::text
