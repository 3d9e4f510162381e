#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Single-sheet OOXML workbook reading and writing.
namespace tgscrape::xlsx {

struct Cell {
  enum class Kind { text, number };
  Kind kind = Kind::text;
  std::string value;  // number cells hold their decimal text
};

using Row = std::vector<std::optional<Cell>>;  // nullopt: empty cell

struct Sheet {
  std::vector<Row> rows;
};

std::string write_workbook(const Sheet& sheet, std::string_view sheet_name = "Sheet1");

// Reads the first worksheet. Inline and shared strings are both understood.
Sheet read_workbook(std::string_view image);

// "A", "B", ..., "Z", "AA", ...
std::string column_letters(std::size_t index);

}  // namespace tgscrape::xlsx
