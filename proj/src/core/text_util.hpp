#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace biasharness::text {

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
// Runs of ASCII whitespace become a single space; leading/trailing removed.
std::string collapse_whitespace(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Curly single/double quotes → ASCII, en/em dashes and minus sign → '-',
// non-breaking space → ' '.
std::string fold_punctuation(std::string_view s);

// Invalid sequences decode as U+FFFD, one byte at a time.
std::u32string utf8_decode(std::string_view s);

std::string sha256_hex(std::string_view bytes);

// Half-up rounding at `digits` decimals, tolerant of binary representation
// error (0.7775 stored as 0.77749999... still rounds up).
double round_half_up(double value, int digits);
std::string format_fixed(double value, int digits);

}  // namespace biasharness::text
