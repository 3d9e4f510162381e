#include "tgscrape/progress.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace tgscrape::progress {

std::string format_duration(double seconds) {
  auto total = static_cast<std::int64_t>(std::floor(std::max(seconds, 0.0)));
  auto days = total / 86400;
  auto hours = (total % 86400) / 3600;
  auto minutes = (total % 3600) / 60;
  auto secs = total % 60;
  return fmt::format("{:02}:{:02}:{:02}:{:02}", days, hours, minutes, secs);
}

ProgressSnapshot estimate_progress(std::int64_t t_index, std::int64_t message_id,
                                   double elapsed_seconds, std::int64_t max_t_index) {
  const double t = static_cast<double>(t_index);
  const double progress = t_index + message_id <= max_t_index
                              ? t / static_cast<double>(t_index + message_id)
                              : t / static_cast<double>(max_t_index);
  ProgressSnapshot snap;
  snap.percentage = progress * 100.0;
  snap.elapsed_seconds = elapsed_seconds;
  const double estimated_total = elapsed_seconds / progress;
  snap.remaining_seconds = estimated_total - elapsed_seconds;
  return snap;
}

std::int64_t display_ceiling(std::int64_t c_index, std::int64_t message_id,
                             std::int64_t max_t_index) {
  return std::min(c_index + message_id, max_t_index);
}

void print_progress_block(std::ostream& out, const ProgressLine& line) {
  const std::string rule(80, '-');
  const auto& s = line.snapshot;
  fmt::print(out, "{}\n", rule);
  fmt::print(out, "Progress: {:.2f}% Elapsed Time: {} Remaining Time: {}\n", s.percentage,
             format_duration(s.elapsed_seconds), format_duration(s.remaining_seconds));
  fmt::print(out, "From {}: {:05} contents of {:05}\n", line.channel, line.c_index,
             s.display_ceiling);
  fmt::print(out, "Id: {:05} / Date: {}\n", line.message_id, line.date);
  fmt::print(out, "Total: {:05} contents until now\n", line.t_index);
  fmt::print(out, "{}\n\n\n", rule);
}

}  // namespace tgscrape::progress
