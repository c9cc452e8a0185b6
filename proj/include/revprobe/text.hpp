#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace revprobe::text {

/// Full Unicode case folding of a UTF-8 string (ICU default folding).
std::string casefold(std::string_view s);

std::string_view trim(std::string_view s);

/// Split on runs of ASCII whitespace; empty pieces are never produced.
std::vector<std::string> split_ws(std::string_view s);

/// Split on a single delimiter character, keeping empty fields.
std::vector<std::string> split(std::string_view s, char delim);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool is_space(char c) noexcept;

std::string replace_all(std::string s, std::string_view from, std::string_view to);

bool starts_with_ci(std::string_view s, std::string_view prefix);

}  // namespace revprobe::text
