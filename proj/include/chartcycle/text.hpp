#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chartcycle::text {

std::string_view trim(std::string_view s) noexcept;

/// NFD-decomposes UTF-8 input and drops combining marks ("café" -> "cafe").
/// Invalid UTF-8 is passed through unchanged.
std::string strip_accents(std::string_view s);

/// Unicode-aware lowercase.
std::string to_lower(std::string_view s);

/// Collapses every run of spaces/tabs into one space and trims both ends.
std::string collapse_whitespace(std::string_view s);

/// lowercase + accents stripped + whitespace collapsed.
std::string normalize_answer(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);

/// Levenshtein distance over Unicode code points.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// 1 - distance / max(len_a, len_b); 1.0 for two empty strings.
double levenshtein_ratio(std::string_view a, std::string_view b);

/// Jaccard similarity of whitespace token sets; 1.0 for two empty sets.
double token_jaccard(std::string_view a, std::string_view b);

/// Strict full-string number parse: optional sign, digits, optional
/// fraction, optional exponent. No inf/nan, no surrounding junk.
std::optional<double> parse_number(std::string_view s) noexcept;

/// Fixed-point rendering with at most six fractional digits, trailing
/// zeros trimmed. Integral columns print without a fraction ("10");
/// non-integral ones keep at least one digit ("1.0").
std::string format_number(double value, bool integral);

std::vector<std::string> split_lines(std::string_view s);

std::string replace_all(std::string s, std::string_view from, std::string_view to);

}  // namespace chartcycle::text
