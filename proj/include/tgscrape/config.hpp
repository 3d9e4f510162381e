#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tgscrape/timefmt.hpp"

namespace tgscrape::config {

// Account credentials, kept in their own file and never passed as flags.
struct Credentials {
  std::string username;  // no leading "@"
  std::string phone;     // "+" followed by 7-15 digits
  std::string api_id;    // numeric
  std::string api_hash;  // 32 hex digits
};

// Throws ValidationError listing every violated field.
void validate_credentials(const Credentials& creds);

// key=value lines; blank lines and lines starting with '#' are ignored.
Credentials parse_credentials(std::string_view text);
Credentials load_credentials(const std::filesystem::path& path);

// Reads TGSCRAPE_USERNAME, TGSCRAPE_PHONE, TGSCRAPE_API_ID and
// TGSCRAPE_API_HASH. Returns nullopt when none of them is set.
std::optional<Credentials> credentials_from_env();

// A channel or group handle in canonical form. t.me links are reduced to
// "@slug"; other spellings are kept verbatim.
class ChannelRef {
 public:
  // Normalizes and validates a single trimmed item.
  static ChannelRef parse(std::string_view item);

  const std::string& handle() const noexcept { return handle_; }

  friend bool operator==(const ChannelRef&, const ChannelRef&) = default;

 private:
  explicit ChannelRef(std::string handle) : handle_(std::move(handle)) {}
  std::string handle_;
};

std::vector<ChannelRef> parse_channel_list(std::string_view raw);

// Inverse of parse_channel_list for already-canonical handles.
std::string join_channel_list(const std::vector<ChannelRef>& channels);

// Both bounds inclusive, both at 00:00:00 UTC of the given day.
struct DateWindow {
  Timestamp date_min;
  Timestamp date_max;

  bool contains(Timestamp t) const { return date_min <= t && t <= date_max; }
};

DateWindow parse_date_window(std::string_view date_min, std::string_view date_max);

enum class OutputFormat { workbook, parquet };

// Lowercases, strips non-alphabetic characters, then maps "excel" and
// "parquet".
OutputFormat normalize_output_format(std::string_view raw);

std::string_view format_flag_value(OutputFormat fmt);  // "excel" | "parquet"
std::string_view file_extension(OutputFormat fmt);     // "xlsx" | "parquet"

inline constexpr std::int64_t kDefaultMaxMessages = 1'000'000;
inline constexpr std::int64_t kDefaultTimeLimit = 21'600;
// Above this, hosted notebook runtimes tend to be killed (~6h20m observed).
inline constexpr std::int64_t kRecommendedTimeLimit = 21'600;

struct ScrapeJobSpec {
  std::vector<ChannelRef> channels;
  DateWindow window;
  std::string file_name;
  std::string key_search;  // empty means unfiltered
  std::int64_t max_t_index = kDefaultMaxMessages;
  std::int64_t time_limit = kDefaultTimeLimit;
  OutputFormat output_format = OutputFormat::workbook;
};

// A spec that passed validate_job. Only validate_job constructs one.
class ValidatedJob {
 public:
  const ScrapeJobSpec& spec() const noexcept { return spec_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 private:
  friend ValidatedJob validate_job(ScrapeJobSpec spec);
  ValidatedJob(ScrapeJobSpec spec, std::vector<std::string> warnings)
      : spec_(std::move(spec)), warnings_(std::move(warnings)) {}

  ScrapeJobSpec spec_;
  std::vector<std::string> warnings_;
};

ValidatedJob validate_job(ScrapeJobSpec spec);

}  // namespace tgscrape::config
