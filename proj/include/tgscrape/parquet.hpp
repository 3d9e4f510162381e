#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

// A small Parquet subset: flat schemas of nullable UTF-8 strings and
// required INT64, one row group, uncompressed PLAIN pages.
namespace tgscrape::parquet {

struct StringColumn {
  std::string name;
  std::vector<std::optional<std::string>> values;
};

struct Int64Column {
  std::string name;
  std::vector<std::int64_t> values;
};

using Column = std::variant<StringColumn, Int64Column>;

struct Table {
  std::vector<Column> columns;
  std::size_t num_rows() const;
};

std::string write_table(const Table& table);

// Reads files written by write_table (and other writers as long as they stick
// to uncompressed PLAIN data pages). Throws FormatError.
Table read_table(std::string_view image);

const std::string& column_name(const Column& c);

}  // namespace tgscrape::parquet
