#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace tgscrape::progress {

struct ProgressSnapshot {
  double percentage = 0;  // (0, 100]
  double elapsed_seconds = 0;
  double remaining_seconds = 0;
  std::int64_t display_ceiling = 0;
};

// "DD:HH:MM:SS", each field truncated and zero-padded to two digits. Days
// widen past two digits when needed.
std::string format_duration(double seconds);

// Progress is t_index / (t_index + message_id) while that denominator stays
// within max_t_index, t_index / max_t_index otherwise. message_id stands in
// for the number of older posts still to visit, so a keyword filter makes the
// estimate pessimistic.
//
// Requires t_index >= 1 and max_t_index >= 1.
ProgressSnapshot estimate_progress(std::int64_t t_index, std::int64_t message_id,
                                   double elapsed_seconds, std::int64_t max_t_index);

// The "contents of N" figure shown next to the per-channel counter.
std::int64_t display_ceiling(std::int64_t c_index, std::int64_t message_id,
                             std::int64_t max_t_index);

struct ProgressLine {
  std::string_view channel;
  std::int64_t c_index = 0;
  std::int64_t t_index = 0;
  std::int64_t message_id = 0;
  std::string_view date;
  ProgressSnapshot snapshot;
};

// Writes the console block emitted after each archived post.
void print_progress_block(std::ostream& out, const ProgressLine& line);

}  // namespace tgscrape::progress
