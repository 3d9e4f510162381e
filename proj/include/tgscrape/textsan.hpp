#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tgscrape/records.hpp"

namespace tgscrape::textsan {

// True for the scalar values XML 1.0 admits as character data.
constexpr bool is_xml_char(char32_t c) {
  return c == 0x9 || c == 0xA || c == 0xD || (c >= 0x20 && c <= 0xD7FF) ||
         (c >= 0xE000 && c <= 0xFFFD) || (c >= 0x10000 && c <= 0x10FFFF);
}

// Removes every code point outside the XML character set from UTF-8 text.
// Byte sequences that are not well-formed UTF-8 are removed as well.
std::string sanitize_xml(std::string_view text);
inline std::string sanitize_xml(const std::string& text) { return sanitize_xml(std::string_view(text)); }
inline std::string sanitize_xml(const char* text) { return sanitize_xml(std::string_view(text)); }
// Absent text sanitizes to empty text.
std::string sanitize_xml(const std::optional<std::string>& text);

// JSON array of objects keyed by the comment column names. Non-ASCII text is
// written verbatim; separators follow the ", " / ": " convention.
std::string encode_comments_json(std::span<const CommentRecord> comments);

// Parses the output of encode_comments_json. Throws FormatError.
std::vector<CommentRecord> decode_comments_json(std::string_view json);

}  // namespace tgscrape::textsan
