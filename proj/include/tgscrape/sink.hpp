#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tgscrape/config.hpp"
#include "tgscrape/records.hpp"

namespace tgscrape::sink {

using config::OutputFormat;

// Rows in append order; columns are always kMessageColumns.
struct ArchiveTable {
  std::vector<MessageRecord> rows;

  friend bool operator==(const ArchiveTable&, const ArchiveTable&) = default;
};

std::string backup_filename(std::string_view file_name, std::int64_t t_index,
                            std::string_view channel, std::int64_t message_id,
                            OutputFormat fmt);
std::string partial_filename(std::string_view channel, std::string_view file_name,
                             std::int64_t t_index, OutputFormat fmt);
std::string final_filename(std::string_view file_name, std::int64_t t_index,
                           OutputFormat fmt);

// Spreadsheet cells hold at most this many characters (code points).
inline constexpr std::size_t kWorkbookCellLimit = 32'767;
inline constexpr std::string_view kTruncationMarker = "…[TRUNCATED]";

struct TruncatedCell {
  std::size_t row = 0;  // 0-based data row
  std::string_view column;
  std::size_t original_length = 0;  // code points
};

struct WriteReport {
  std::vector<TruncatedCell> truncated;
};

// Cuts text to kWorkbookCellLimit code points, ending in kTruncationMarker.
// Returns false (and leaves text alone) when it already fits.
bool truncate_for_workbook(std::string& text);

// Atomic per file. Truncations are returned and logged to stderr.
WriteReport write_records(std::span<const MessageRecord> rows,
                          const std::filesystem::path& path, OutputFormat fmt);
inline WriteReport write_records(const ArchiveTable& table, const std::filesystem::path& path,
                                 OutputFormat fmt) {
  return write_records(std::span<const MessageRecord>(table.rows), path, fmt);
}

// Throws FormatError for files that are not archives in the given format and
// SinkError when the file cannot be opened.
ArchiveTable read_back(const std::filesystem::path& path, OutputFormat fmt);

// Destination for the engine's snapshots.
class Sink {
 public:
  virtual ~Sink() = default;
  virtual OutputFormat format() const = 0;
  // Writes a cumulative snapshot under the given bare filename and returns
  // where it went. Throws SinkError.
  virtual std::filesystem::path write(std::span<const MessageRecord> rows,
                                      const std::string& filename) = 0;
};

class DirectorySink final : public Sink {
 public:
  DirectorySink(std::filesystem::path dir, OutputFormat fmt);

  OutputFormat format() const override { return fmt_; }
  std::filesystem::path write(std::span<const MessageRecord> rows,
                              const std::string& filename) override;

 private:
  std::filesystem::path dir_;
  OutputFormat fmt_;
};

}  // namespace tgscrape::sink
