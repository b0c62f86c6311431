#include "roomsense/tstore/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <vector>

#include <fmt/format.h>

namespace roomsense::tstore {

std::string format_value(double v) {
  const long long x = std::llround(v * 100.0);
  const long long mag = std::llabs(x);
  return fmt::format("{}{}.{:02}", x < 0 ? "-" : "", mag / 100, mag % 100);
}

std::string format_row(const Reading& r) {
  return fmt::format("{},{},{},{},{}\n", format_iso8601(r.timestamp), r.device_id,
                     metric_name(r.metric), format_value(r.value), canonical_unit(r.metric));
}

namespace {

std::optional<double> parse_value(std::string_view s) {
  bool negative = false;
  if (!s.empty() && s.front() == '-') {
    negative = true;
    s.remove_prefix(1);
  }
  const auto dot = s.find('.');
  if (dot == std::string_view::npos || dot == 0 || s.size() - dot != 3) return std::nullopt;
  long long whole = 0;
  int frac = 0;
  const auto w = std::from_chars(s.data(), s.data() + dot, whole);
  const auto f = std::from_chars(s.data() + dot + 1, s.data() + s.size(), frac);
  if (w.ec != std::errc{} || w.ptr != s.data() + dot) return std::nullopt;
  if (f.ec != std::errc{} || f.ptr != s.data() + s.size() || s[dot + 1] == '-' || s[dot + 1] == '+')
    return std::nullopt;
  if (s.front() == '+' || s.front() == '-') return std::nullopt;
  const double v = static_cast<double>(whole * 100 + frac) / 100.0;
  return negative ? -v : v;
}

}  // namespace

std::optional<Reading> parse_row(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cols.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (cols.size() != 5) return std::nullopt;
  auto ts = parse_iso8601(cols[0]);
  auto metric = parse_metric(cols[2]);
  auto value = parse_value(cols[3]);
  if (!ts || cols[0].size() != 20 || !metric || !value || cols[1].empty()) return std::nullopt;
  if (canonical_unit(*metric) != cols[4]) return std::nullopt;
  Reading r;
  r.device_id = std::string(cols[1]);
  r.metric = *metric;
  r.value = *value;
  r.timestamp = *ts;
  return r;
}

bool is_storable_id(std::string_view id) {
  if (id.empty() || id == "." || id == "..") return false;
  for (char c : id)
    if (c == ',' || c == '/' || c == '\\' || c == '\n' || c == '\r' || c == '"' ||
        static_cast<unsigned char>(c) < 0x20)
      return false;
  return true;
}

}  // namespace roomsense::tstore
