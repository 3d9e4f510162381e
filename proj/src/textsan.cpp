#include "tgscrape/textsan.hpp"

#include <fmt/format.h>

#include <json.hpp>

#include "tgscrape/error.hpp"

namespace tgscrape::textsan {
namespace {

struct Decoded {
  char32_t cp = 0;
  std::size_t len = 1;
  bool valid = false;
};

bool is_cont(unsigned char b) { return (b & 0xC0) == 0x80; }

// Strict UTF-8 decoding (no overlongs, no surrogates, <= U+10FFFF).
Decoded decode_at(std::string_view s, std::size_t i) {
  auto b0 = static_cast<unsigned char>(s[i]);
  auto at = [&](std::size_t k) -> unsigned char {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0;
  };
  if (b0 < 0x80) return {b0, 1, true};
  if (b0 >= 0xC2 && b0 <= 0xDF) {
    if (!is_cont(at(1))) return {};
    return {char32_t((b0 & 0x1F) << 6 | (at(1) & 0x3F)), 2, true};
  }
  if (b0 >= 0xE0 && b0 <= 0xEF) {
    unsigned char lo = b0 == 0xE0 ? 0xA0 : 0x80;
    unsigned char hi = b0 == 0xED ? 0x9F : 0xBF;
    if (at(1) < lo || at(1) > hi || !is_cont(at(2))) return {};
    return {char32_t((b0 & 0x0F) << 12 | (at(1) & 0x3F) << 6 | (at(2) & 0x3F)), 3, true};
  }
  if (b0 >= 0xF0 && b0 <= 0xF4) {
    unsigned char lo = b0 == 0xF0 ? 0x90 : 0x80;
    unsigned char hi = b0 == 0xF4 ? 0x8F : 0xBF;
    if (at(1) < lo || at(1) > hi || !is_cont(at(2)) || !is_cont(at(3))) return {};
    return {char32_t((b0 & 0x07) << 18 | (at(1) & 0x3F) << 12 | (at(2) & 0x3F) << 6 |
                     (at(3) & 0x3F)),
            4, true};
  }
  return {};
}

void append_json_string(std::string& out, std::string_view s) {
  out += '"';
  for (char ch : s) {
    auto c = static_cast<unsigned char>(ch);
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      default:
        if (c < 0x20)
          out += fmt::format("\\u{:04x}", c);
        else
          out += ch;
    }
  }
  out += '"';
}

void append_json_int(std::string& out, const std::optional<std::int64_t>& v) {
  if (v)
    out += std::to_string(*v);
  else
    out += "null";
}

void append_json_text(std::string& out, const std::optional<std::string>& v) {
  if (v)
    append_json_string(out, sanitize_xml(*v));
  else
    out += "null";
}

}  // namespace

std::string sanitize_xml(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    auto d = decode_at(text, i);
    if (d.valid && is_xml_char(d.cp)) out.append(text.substr(i, d.len));
    i += d.len;
  }
  return out;
}

std::string sanitize_xml(const std::optional<std::string>& text) {
  return text ? sanitize_xml(*text) : std::string{};
}

std::string encode_comments_json(std::span<const CommentRecord> comments) {
  std::string out = "[";
  bool first = true;
  for (const auto& c : comments) {
    if (!first) out += ", ";
    first = false;
    auto key = [&](std::size_t i) {
      if (i > 0) out += ", ";
      append_json_string(out, kCommentColumns[i]);
      out += ": ";
    };
    out += '{';
    key(0); append_json_string(out, CommentRecord::kType);
    key(1); append_json_string(out, sanitize_xml(c.group));
    key(2); append_json_int(out, c.author_id);
    key(3); append_json_string(out, sanitize_xml(c.content));
    key(4); append_json_string(out, sanitize_xml(c.date));
    key(5); append_json_int(out, c.message_id);
    key(6); append_json_text(out, c.author);
    key(7); append_json_int(out, c.views);
    key(8); append_json_string(out, sanitize_xml(c.reactions));
    key(9); append_json_int(out, c.shares);
    key(10); append_json_string(out, media_text(c.media));
    key(11); append_json_string(out, sanitize_xml(c.url));
    out += '}';
  }
  out += ']';
  return sanitize_xml(out);
}

std::vector<CommentRecord> decode_comments_json(std::string_view json) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("Comments List is not valid JSON: {}", e.what()));
  }
  if (!doc.is_array()) throw FormatError("Comments List is not a JSON array");

  std::vector<CommentRecord> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& obj = doc[i];
    auto field = [&](std::size_t col) -> const nlohmann::json& {
      auto name = std::string(kCommentColumns[col]);
      if (!obj.is_object() || !obj.contains(name))
        throw FormatError(fmt::format("comment {}: missing '{}'", i, name));
      return obj.at(name);
    };
    auto text = [&](std::size_t col) {
      const auto& v = field(col);
      if (!v.is_string())
        throw FormatError(fmt::format("comment {}: '{}' is not a string", i, kCommentColumns[col]));
      return v.get<std::string>();
    };
    auto opt_int = [&](std::size_t col) -> std::optional<std::int64_t> {
      const auto& v = field(col);
      if (v.is_null()) return std::nullopt;
      if (!v.is_number_integer())
        throw FormatError(fmt::format("comment {}: '{}' is not an integer", i, kCommentColumns[col]));
      return v.get<std::int64_t>();
    };

    if (text(0) != CommentRecord::kType)
      throw FormatError(fmt::format("comment {}: Type is not 'comment'", i));
    CommentRecord c;
    c.group = text(1);
    c.author_id = opt_int(2);
    c.content = text(3);
    c.date = text(4);
    auto id = opt_int(5);
    if (!id) throw FormatError(fmt::format("comment {}: Comment Message ID is null", i));
    c.message_id = *id;
    if (!field(6).is_null()) c.author = text(6);
    c.views = opt_int(7);
    c.reactions = text(8);
    c.shares = opt_int(9);
    auto media = text(10);
    if (media != "True" && media != "False")
      throw FormatError(fmt::format("comment {}: Comment Media is '{}'", i, media));
    c.media = media == "True";
    c.url = text(11);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace tgscrape::textsan
