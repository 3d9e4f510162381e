#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace tgscrape {

// Message timestamps: whole seconds, UTC.
using Timestamp = std::chrono::sys_seconds;

// Wall/simulated clock readings.
using Seconds = std::chrono::duration<double>;
using Instant = std::chrono::time_point<std::chrono::system_clock, Seconds>;

// "YYYY-MM-DD" -> midnight UTC. Throws tgscrape::Error on malformed input.
Timestamp parse_iso_date(std::string_view text);

// "YYYY-MM-DDTHH:MM:SS[.fff](Z|+00:00)" -> UTC, fractional part dropped.
Timestamp parse_iso_datetime(std::string_view text);

// "YYYY-MM-DD HH:MM:SS"
std::string format_archive_date(Timestamp t);

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_iso_datetime(Timestamp t);

// Parses the archive pattern back; used to validate Date columns.
Timestamp parse_archive_date(std::string_view text);

inline double epoch_seconds(Instant t) { return t.time_since_epoch().count(); }
inline Instant instant_from_epoch(double s) { return Instant{Seconds{s}}; }

}  // namespace tgscrape
