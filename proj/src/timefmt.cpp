#include "tgscrape/timefmt.hpp"

#include <fmt/format.h>

#include "tgscrape/error.hpp"

namespace tgscrape {
namespace {

using namespace std::chrono;

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

int to_int(std::string_view s) {
  int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

// Parses "YYYY-MM-DD" at the front of text.
sys_days parse_date_part(std::string_view text, std::string_view original) {
  if (text.size() < 10 || text[4] != '-' || text[7] != '-' || !all_digits(text.substr(0, 4)) ||
      !all_digits(text.substr(5, 2)) || !all_digits(text.substr(8, 2))) {
    throw Error(fmt::format("invalid date '{}': expected YYYY-MM-DD", original));
  }
  year_month_day ymd{year{to_int(text.substr(0, 4))},
                     month{static_cast<unsigned>(to_int(text.substr(5, 2)))},
                     day{static_cast<unsigned>(to_int(text.substr(8, 2)))}};
  if (!ymd.ok()) throw Error(fmt::format("invalid date '{}': no such calendar day", original));
  return sys_days{ymd};
}

}  // namespace

Timestamp parse_iso_date(std::string_view text) {
  if (text.size() != 10) throw Error(fmt::format("invalid date '{}': expected YYYY-MM-DD", text));
  return Timestamp{parse_date_part(text, text)};
}

Timestamp parse_iso_datetime(std::string_view text) {
  auto bad = [&] {
    return Error(fmt::format("invalid timestamp '{}': expected YYYY-MM-DDTHH:MM:SSZ", text));
  };
  if (text.size() < 20) throw bad();
  auto day = parse_date_part(text, text);
  if (text[10] != 'T' && text[10] != ' ') throw bad();
  auto clock = text.substr(11, 8);
  if (clock[2] != ':' || clock[5] != ':' || !all_digits(clock.substr(0, 2)) ||
      !all_digits(clock.substr(3, 2)) || !all_digits(clock.substr(6, 2))) {
    throw bad();
  }
  int h = to_int(clock.substr(0, 2)), m = to_int(clock.substr(3, 2)), s = to_int(clock.substr(6, 2));
  if (h > 23 || m > 59 || s > 59) throw bad();

  auto rest = text.substr(19);
  if (!rest.empty() && rest.front() == '.') {
    std::size_t i = 1;
    while (i < rest.size() && rest[i] >= '0' && rest[i] <= '9') ++i;
    if (i == 1) throw bad();
    rest.remove_prefix(i);
  }
  if (rest != "Z" && rest != "+00:00") throw bad();
  return Timestamp{day} + hours{h} + minutes{m} + seconds{s};
}

std::string format_archive_date(Timestamp t) {
  auto day = floor<days>(t);
  year_month_day ymd{day};
  hh_mm_ss hms{t - day};
  return fmt::format("{:04}-{:02}-{:02} {:02}:{:02}:{:02}", int(ymd.year()),
                     unsigned(ymd.month()), unsigned(ymd.day()), hms.hours().count(),
                     hms.minutes().count(), hms.seconds().count());
}

std::string format_iso_datetime(Timestamp t) {
  auto s = format_archive_date(t);
  s[10] = 'T';
  s += 'Z';
  return s;
}

Timestamp parse_archive_date(std::string_view text) {
  if (text.size() != 19 || text[10] != ' ')
    throw Error(fmt::format("invalid archive date '{}'", text));
  std::string iso(text);
  iso[10] = 'T';
  iso += 'Z';
  return parse_iso_datetime(iso);
}

}  // namespace tgscrape
