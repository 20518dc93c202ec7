#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace agr::text {

std::string_view trim(std::string_view s) noexcept;

// ASCII lowercase; bytes >= 0x80 (UTF-8 sequences) pass through unchanged.
std::string lower(std::string_view s);

// Lowercase, trim, and collapse internal whitespace runs to one space.
std::string normalize_field(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);

bool has_control_chars(std::string_view s) noexcept;

}  // namespace agr::text
