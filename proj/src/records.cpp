#include "tgscrape/records.hpp"

#include <fmt/format.h>

#include <charconv>

#include "tgscrape/error.hpp"

namespace tgscrape {
namespace {

std::optional<std::string> int_text(const std::optional<std::int64_t>& v) {
  if (!v) return std::nullopt;
  return std::to_string(*v);
}

std::int64_t parse_int(std::string_view column, std::string_view text) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw FormatError(fmt::format("column '{}': '{}' is not an integer", column, text));
  return v;
}

}  // namespace

TextRow to_text_row(const MessageRecord& rec) {
  return TextRow{std::string(MessageRecord::kType),
                 rec.group,
                 int_text(rec.author_id),
                 rec.content,
                 rec.date,
                 std::to_string(rec.message_id),
                 rec.author,
                 int_text(rec.views),
                 rec.reactions,
                 int_text(rec.shares),
                 std::string(media_text(rec.media)),
                 rec.url,
                 rec.comments_list};
}

MessageRecord from_text_row(const TextRow& row) {
  auto required = [&](std::size_t col) -> const std::string& {
    if (!row[col]) throw FormatError(fmt::format("column '{}' is empty", kMessageColumns[col]));
    return *row[col];
  };
  auto opt_int = [&](std::size_t col) -> std::optional<std::int64_t> {
    if (!row[col]) return std::nullopt;
    return parse_int(kMessageColumns[col], *row[col]);
  };

  if (required(0) != MessageRecord::kType)
    throw FormatError(fmt::format("column 'Type': expected 'text', got '{}'", *row[0]));
  MessageRecord rec;
  rec.group = required(1);
  rec.author_id = opt_int(2);
  rec.content = required(3);
  rec.date = required(4);
  rec.message_id = parse_int(kMessageColumns[5], required(5));
  rec.author = row[6];
  rec.views = opt_int(7);
  rec.reactions = required(8);
  rec.shares = opt_int(9);
  const auto& media = required(10);
  if (media != "True" && media != "False")
    throw FormatError(fmt::format("column 'Media': expected True/False, got '{}'", media));
  rec.media = media == "True";
  rec.url = required(11);
  rec.comments_list = required(12);
  return rec;
}

}  // namespace tgscrape
