#include "roomsense/core/time.hpp"

#include <charconv>

#include <fmt/format.h>

namespace roomsense {

using namespace std::chrono;

std::string format_iso8601(SimInstant t) {
  const auto secs = floor<seconds>(t);
  const auto day = floor<days>(secs);
  const year_month_day ymd{day};
  const hh_mm_ss hms{secs - day};
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     hms.hours().count(), hms.minutes().count(), hms.seconds().count());
}

std::string format_date(SimInstant t) {
  const year_month_day ymd{floor<days>(t)};
  return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

std::optional<SimInstant> parse_iso8601(std::string_view text) {
  // YYYY-MM-DD[THH:MM:SSZ]
  if (text.size() != 10 && text.size() != 20) return std::nullopt;
  if (text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) ||
      !parse_int(text.substr(8, 2), d))
    return std::nullopt;
  if (text.size() == 20) {
    if (text[10] != 'T' || text[13] != ':' || text[16] != ':' || text[19] != 'Z')
      return std::nullopt;
    if (!parse_int(text.substr(11, 2), h) || !parse_int(text.substr(14, 2), mi) ||
        !parse_int(text.substr(17, 2), s))
      return std::nullopt;
    if (h > 23 || mi > 59 || s > 59) return std::nullopt;
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return SimInstant{sys_days{ymd}} + hours{h} + minutes{mi} + seconds{s};
}

std::int64_t epoch_seconds(SimInstant t) {
  return floor<seconds>(t).time_since_epoch().count();
}

SimInstant from_epoch_seconds(std::int64_t s) { return SimInstant{seconds{s}}; }

SimDuration time_of_day(SimInstant t) { return t - floor<days>(t); }

int hour_of_day(SimInstant t) {
  return static_cast<int>(floor<hours>(time_of_day(t)).count());
}

}  // namespace roomsense
