#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tgscrape {

// One reply inside a post's discussion thread. Serialized into the parent's
// "Comments List" cell, never archived as a row of its own.
struct CommentRecord {
  static constexpr std::string_view kType = "comment";

  std::string group;
  std::optional<std::int64_t> author_id;
  std::string content;
  std::string date;  // "YYYY-MM-DD HH:MM:SS", UTC
  std::int64_t message_id = 0;
  std::optional<std::string> author;
  std::optional<std::int64_t> views;
  std::string reactions;
  std::optional<std::int64_t> shares;
  bool media = false;
  std::string url;

  friend bool operator==(const CommentRecord&, const CommentRecord&) = default;
};

// One archived post; a row of the output table.
struct MessageRecord {
  static constexpr std::string_view kType = "text";

  std::string group;
  std::optional<std::int64_t> author_id;
  std::string content;
  std::string date;
  std::int64_t message_id = 0;
  std::optional<std::string> author;
  std::optional<std::int64_t> views;
  std::string reactions;
  std::optional<std::int64_t> shares;
  bool media = false;
  std::string url;
  std::string comments_list;  // JSON array text

  friend bool operator==(const MessageRecord&, const MessageRecord&) = default;
};

inline constexpr std::array<std::string_view, 13> kMessageColumns = {
    "Type",  "Group",     "Author ID", "Content", "Date", "Message ID",   "Author",
    "Views", "Reactions", "Shares",    "Media",   "Url",  "Comments List"};

inline constexpr std::size_t kMessageIdColumn = 5;

inline constexpr std::array<std::string_view, 12> kCommentColumns = {
    "Type",
    "Comment Group",
    "Comment Author ID",
    "Comment Content",
    "Comment Date",
    "Comment Message ID",
    "Comment Author",
    "Comment Views",
    "Comment Reactions",
    "Comment Shares",
    "Comment Media",
    "Comment Url"};

inline std::string_view media_text(bool media) { return media ? "True" : "False"; }

// Text cells of a row in column order. Message ID is rendered in decimal;
// absent optionals stay absent.
using TextRow = std::array<std::optional<std::string>, kMessageColumns.size()>;

TextRow to_text_row(const MessageRecord& rec);

// Throws FormatError when a cell does not fit the record schema.
MessageRecord from_text_row(const TextRow& row);

}  // namespace tgscrape
