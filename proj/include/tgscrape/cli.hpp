#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tgscrape/config.hpp"

namespace tgscrape::cli {

// Everything the command line carries. Job fields mirror ScrapeJobSpec but
// stay as raw text until validation.
struct CliInvocation {
  std::string channels;
  std::string date_min;
  std::string date_max;
  std::string file_name = "Test";
  std::string key_search;
  std::int64_t max_messages = config::kDefaultMaxMessages;
  std::int64_t time_limit = config::kDefaultTimeLimit;
  std::string format = "excel";

  std::optional<std::filesystem::path> credentials_path;
  std::optional<std::filesystem::path> fixture_path;
  std::filesystem::path output_dir = ".";
  std::optional<std::filesystem::path> budget_state_path;
  std::int64_t budget_limit = 200;
  std::int64_t checkpoint_interval = 1000;
  double min_loop_seconds = 60.0;
};

// Throws ValidationError naming the offending flag. --help and parse
// failures surface as ValidationError with field "usage".
CliInvocation parse_invocation(const std::vector<std::string>& args);

// Builds and validates the job; errors name the flag, not the field.
config::ValidatedJob build_job(const CliInvocation& inv);

// Renders a spec back into job flags (channels, dates, name, keyword, caps,
// format). parse -> build -> render is stable.
std::vector<std::string> render_job_flags(const config::ScrapeJobSpec& spec);

// Reads one line, trimmed. Throws Error on a closed stream or when the
// session is not interactive.
std::string prompt_verification_code(std::istream& in, std::ostream& out, bool interactive);

// Full command: parse, validate, run, report. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Set from the SIGINT handler; the running job stops and writes its final
// file.
void request_interrupt() noexcept;
void reset_interrupt() noexcept;

}  // namespace tgscrape::cli
