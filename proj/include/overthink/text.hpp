#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace overthink::text {

/// Number of UTF-8 code points in `s`. Continuation bytes are not counted,
/// so malformed input degrades to a byte-ish count rather than throwing.
std::size_t char_count(std::string_view s);

/// The final `n` code points of `s` (all of `s` if shorter).
std::string_view tail_chars(std::string_view s, std::size_t n);

/// Decodes `s` into code points; invalid bytes map to themselves.
std::vector<char32_t> decode_utf8(std::string_view s);

bool is_space(char c);

std::string_view trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::string to_lower_ascii(std::string_view s);
bool ends_with_space(std::string_view s);

/// Counts non-overlapping occurrences of `needle` in `hay`.
std::size_t count_occurrences(std::string_view hay, std::string_view needle);

}  // namespace overthink::text
