#include "tgscrape/sink.hpp"

#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include "tgscrape/error.hpp"
#include "tgscrape/parquet.hpp"
#include "tgscrape/xlsx.hpp"

namespace tgscrape::sink {
namespace {

std::size_t count_code_points(std::string_view s) {
  std::size_t n = 0;
  for (char c : s)
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  return n;
}

// Byte offset of the n-th code point (or s.size()).
std::size_t code_point_offset(std::string_view s, std::size_t n) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
      if (seen == n) return i;
      ++seen;
    }
  }
  return s.size();
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SinkError(fmt::format("cannot open '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_atomically(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw SinkError(fmt::format("cannot create '{}'", tmp.string()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw SinkError(fmt::format("cannot write '{}'", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw SinkError(fmt::format("cannot move archive into place at '{}'", path.string()));
  }
}

std::string encode_workbook(std::span<const MessageRecord> rows, WriteReport& report) {
  xlsx::Sheet sheet;
  sheet.rows.reserve(rows.size() + 1);
  xlsx::Row header;
  for (auto name : kMessageColumns) header.push_back(xlsx::Cell{xlsx::Cell::Kind::text, std::string(name)});
  sheet.rows.push_back(std::move(header));

  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto cells = to_text_row(rows[r]);
    xlsx::Row row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!cells[c]) {
        row.emplace_back(std::nullopt);
        continue;
      }
      auto kind = c == kMessageIdColumn ? xlsx::Cell::Kind::number : xlsx::Cell::Kind::text;
      auto value = std::move(*cells[c]);
      auto original = count_code_points(value);
      if (truncate_for_workbook(value)) {
        report.truncated.push_back({r, kMessageColumns[c], original});
        std::cerr << fmt::format(
            "warning: row {} column '{}' has {} characters; truncated to {} for the workbook "
            "(use parquet to keep the full text)\n",
            r + 1, kMessageColumns[c], original, kWorkbookCellLimit);
      }
      row.push_back(xlsx::Cell{kind, std::move(value)});
    }
    sheet.rows.push_back(std::move(row));
  }
  return xlsx::write_workbook(sheet);
}

std::string encode_parquet(std::span<const MessageRecord> rows) {
  parquet::Table table;
  for (std::size_t c = 0; c < kMessageColumns.size(); ++c) {
    if (c == kMessageIdColumn)
      table.columns.emplace_back(parquet::Int64Column{std::string(kMessageColumns[c]), {}});
    else
      table.columns.emplace_back(parquet::StringColumn{std::string(kMessageColumns[c]), {}});
  }
  for (const auto& rec : rows) {
    auto cells = to_text_row(rec);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == kMessageIdColumn)
        std::get<parquet::Int64Column>(table.columns[c]).values.push_back(rec.message_id);
      else
        std::get<parquet::StringColumn>(table.columns[c]).values.push_back(std::move(cells[c]));
    }
  }
  return parquet::write_table(table);
}

void check_header(const std::vector<std::string>& names) {
  if (names.size() != kMessageColumns.size())
    throw FormatError(fmt::format("archive has {} columns, expected {}", names.size(), kMessageColumns.size()));
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] != kMessageColumns[i])
      throw FormatError(fmt::format("column {} is '{}', expected '{}'", i, names[i], kMessageColumns[i]));
}

ArchiveTable decode_workbook(std::string_view image) {
  auto sheet = xlsx::read_workbook(image);
  if (sheet.rows.empty()) throw FormatError("workbook has no header row");
  std::vector<std::string> names;
  for (const auto& cell : sheet.rows.front()) names.push_back(cell ? cell->value : std::string{});
  check_header(names);

  ArchiveTable table;
  for (std::size_t r = 1; r < sheet.rows.size(); ++r) {
    const auto& row = sheet.rows[r];
    if (row.size() > kMessageColumns.size())
      throw FormatError(fmt::format("workbook row {} has extra cells", r + 1));
    TextRow cells;
    for (std::size_t c = 0; c < row.size(); ++c)
      if (row[c]) cells[c] = row[c]->value;
    table.rows.push_back(from_text_row(cells));
  }
  return table;
}

ArchiveTable decode_parquet(std::string_view image) {
  auto pq = parquet::read_table(image);
  std::vector<std::string> names;
  for (const auto& c : pq.columns) names.push_back(parquet::column_name(c));
  check_header(names);

  ArchiveTable table;
  const auto n = pq.num_rows();
  table.rows.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    TextRow cells;
    for (std::size_t c = 0; c < pq.columns.size(); ++c) {
      if (const auto* s = std::get_if<parquet::StringColumn>(&pq.columns[c]))
        cells[c] = s->values[r];
      else
        cells[c] = std::to_string(std::get<parquet::Int64Column>(pq.columns[c]).values[r]);
    }
    table.rows.push_back(from_text_row(cells));
  }
  return table;
}

}  // namespace

std::string backup_filename(std::string_view file_name, std::int64_t t_index,
                            std::string_view channel, std::int64_t message_id, OutputFormat fmt) {
  return fmt::format("backup_{}_until_{:05}_{}_ID{:07}.{}", file_name, t_index, channel, message_id,
                     config::file_extension(fmt));
}

std::string partial_filename(std::string_view channel, std::string_view file_name,
                             std::int64_t t_index, OutputFormat fmt) {
  return fmt::format("complete_{}_in_{}_until_{:05}.{}", channel, file_name, t_index,
                     config::file_extension(fmt));
}

std::string final_filename(std::string_view file_name, std::int64_t t_index, OutputFormat fmt) {
  return fmt::format("FINAL_{}_with_{:05}.{}", file_name, t_index, config::file_extension(fmt));
}

bool truncate_for_workbook(std::string& text) {
  if (text.size() <= kWorkbookCellLimit) return false;  // bytes bound code points
  if (count_code_points(text) <= kWorkbookCellLimit) return false;
  const auto keep = kWorkbookCellLimit - count_code_points(kTruncationMarker);
  text.resize(code_point_offset(text, keep));
  text += kTruncationMarker;
  return true;
}

WriteReport write_records(std::span<const MessageRecord> rows, const std::filesystem::path& path,
                          OutputFormat fmt) {
  WriteReport report;
  const auto bytes = fmt == OutputFormat::workbook ? encode_workbook(rows, report) : encode_parquet(rows);
  write_atomically(path, bytes);
  return report;
}

ArchiveTable read_back(const std::filesystem::path& path, OutputFormat fmt) {
  const auto bytes = slurp(path);
  try {
    return fmt == OutputFormat::workbook ? decode_workbook(bytes) : decode_parquet(bytes);
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

DirectorySink::DirectorySink(std::filesystem::path dir, OutputFormat fmt)
    : dir_(std::move(dir)), fmt_(fmt) {}

std::filesystem::path DirectorySink::write(std::span<const MessageRecord> rows,
                                           const std::string& filename) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw SinkError(fmt::format("cannot create output directory '{}': {}", dir_.string(), ec.message()));
  auto path = dir_ / filename;
  write_records(rows, path, fmt_);
  return path;
}

}  // namespace tgscrape::sink
