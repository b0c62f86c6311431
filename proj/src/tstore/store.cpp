#include "roomsense/tstore/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include <spdlog/spdlog.h>

#include "roomsense/tstore/csv.hpp"

namespace roomsense::tstore {

namespace fs = std::filesystem;
using namespace std::chrono;

std::string_view append_status_name(AppendStatus s) {
  switch (s) {
    case AppendStatus::ok: return "OK";
    case AppendStatus::out_of_order: return "OUT_OF_ORDER";
    case AppendStatus::invalid: return "INVALID";
  }
  return "";
}

namespace {

constexpr std::string_view kDevicesHeader = "device_id,room_id";

[[noreturn]] void throw_errno(const std::string& what) {
  throw std::system_error(errno, std::generic_category(), what);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Calls f(line) for each LF-terminated line; returns the offset just past the last
/// terminator.
template <class F>
std::size_t for_each_line(std::string_view text, F&& f) {
  std::size_t start = 0;
  for (;;) {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) return start;
    f(text.substr(start, nl - start));
    start = nl + 1;
  }
}

void sync_dir(const fs::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

/// Drops an unterminated tail and then a final complete line that fails `valid`.
/// Returns the number of rows dropped.
template <class Valid>
std::size_t repair_tail(const fs::path& path, Valid&& valid) {
  const std::string text = slurp(path);
  std::size_t keep = text.size();
  std::size_t dropped = 0;
  const auto last_nl = text.rfind('\n');
  if (!text.empty() && text.back() != '\n') {
    keep = last_nl == std::string::npos ? 0 : last_nl + 1;
    ++dropped;
  }
  if (keep > 0) {
    const std::string_view body(text.data(), keep - 1);
    const auto prev_nl = body.rfind('\n');
    const std::size_t line_start = prev_nl == std::string_view::npos ? 0 : prev_nl + 1;
    if (!valid(body.substr(line_start), line_start == 0)) {
      keep = line_start;
      ++dropped;
    }
  }
  if (keep != text.size()) fs::resize_file(path, keep);
  return dropped;
}

}  // namespace

std::vector<Reading> read_series_file(const fs::path& path) {
  std::vector<Reading> out;
  const std::string text = slurp(path);
  bool first = true;
  bool header_ok = false;
  for_each_line(text, [&](std::string_view line) {
    if (first) {
      first = false;
      header_ok = line == kHeader;
      if (!header_ok) spdlog::error("store: {} has a bad header", path.string());
      return;
    }
    if (!header_ok) return;
    if (auto r = parse_row(line)) {
      out.push_back(std::move(*r));
    } else {
      spdlog::warn("store: skipping unparseable row in {}", path.string());
    }
  });
  return out;
}

Store::Store(fs::path root, StoreOptions options) : root_(std::move(root)), options_(options) {
  fs::create_directories(root_ / "data");
  if (options_.recover) recover_all();
  load_devices();
}

Store::~Store() {
  for (auto& [id, f] : open_)
    if (f.fd >= 0) ::close(f.fd);
}

void Store::recover_all() {
  const auto check_row = [](std::string_view line, bool is_first) {
    return is_first ? line == kHeader : parse_row(line).has_value();
  };
  for (const auto& dev : fs::directory_iterator(root_ / "data")) {
    if (!dev.is_directory()) continue;
    for (const auto& file : fs::directory_iterator(dev.path())) {
      if (file.path().extension() != ".csv") continue;
      if (const std::size_t n = repair_tail(file.path(), check_row)) {
        spdlog::warn("store: recovered {}: dropped {} torn row(s)", file.path().string(), n);
        recovery_.repaired.push_back(file.path());
        recovery_.dropped_rows += n;
      }
    }
  }
  const fs::path devices = root_ / "devices.csv";
  if (fs::exists(devices)) {
    repair_tail(devices, [](std::string_view line, bool is_first) {
      return is_first ? line == kDevicesHeader : line.find(',') != std::string_view::npos;
    });
  }
}

void Store::load_devices() {
  const fs::path path = root_ / "devices.csv";
  if (!fs::exists(path)) return;
  const std::string text = slurp(path);
  bool first = true;
  for_each_line(text, [&](std::string_view line) {
    if (first) {
      first = false;
      return;
    }
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) return;
    rooms_[std::string(line.substr(0, comma))] = std::string(line.substr(comma + 1));
  });
}

void Store::remember_room(const std::string& device_id, const std::string& room_id) {
  auto it = rooms_.find(device_id);
  if (it != rooms_.end() && it->second == room_id) return;
  const fs::path path = root_ / "devices.csv";
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw_errno("open " + path.string());
  try {
    if (::lseek(fd, 0, SEEK_END) == 0) write_line(fd, std::string(kDevicesHeader) + "\n");
    write_line(fd, device_id + "," + room_id + "\n");
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  rooms_[device_id] = room_id;
}

fs::path Store::file_for(const std::string& device_id, SimInstant t) const {
  return root_ / "data" / device_id / (format_date(t) + ".csv");
}

void Store::load_last(const std::string& device_id) {
  if (!loaded_.insert(device_id).second) return;
  const fs::path dir = root_ / "data" / device_id;
  if (!fs::is_directory(dir)) return;
  std::vector<fs::path> files;
  for (const auto& f : fs::directory_iterator(dir))
    if (f.path().extension() == ".csv") files.push_back(f.path());
  std::sort(files.begin(), files.end());
  const std::string room = rooms_.count(device_id) ? rooms_.at(device_id) : std::string{};
  for (const auto& f : files) {
    for (auto& r : read_series_file(f)) {
      r.room_id = room;
      auto& slot = last_[{device_id, r.metric}];
      if (slot.device_id.empty() || r.timestamp >= slot.timestamp) slot = std::move(r);
    }
  }
}

void Store::write_line(int fd, std::string_view line) {
  const ssize_t n = ::write(fd, line.data(), line.size());
  if (n < 0) throw_errno("store write");
  if (static_cast<std::size_t>(n) != line.size())
    throw std::system_error(std::make_error_code(std::errc::io_error), "short store write");
  if (options_.durable && ::fdatasync(fd) != 0) throw_errno("store fdatasync");
}

int Store::open_for_append(const std::string& device_id, SimInstant t) {
  const std::string date = format_date(t);
  auto& slot = open_[device_id];
  if (slot.fd >= 0 && slot.date == date) return slot.fd;
  if (slot.fd >= 0) ::close(slot.fd);
  slot.fd = -1;

  const fs::path path = file_for(device_id, t);
  const bool new_dir = !fs::exists(path.parent_path());
  fs::create_directories(path.parent_path());
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw_errno("open " + path.string());
  slot = OpenFile{date, fd};
  if (::lseek(fd, 0, SEEK_END) == 0) {
    write_line(fd, std::string(kHeader) + "\n");
    if (options_.durable) {
      sync_dir(path.parent_path());
      if (new_dir) sync_dir(path.parent_path().parent_path());
    }
  }
  return fd;
}

AppendStatus Store::append(const Reading& input) {
  if (!is_valid(input) || !is_storable_id(input.device_id)) return AppendStatus::invalid;
  if (!input.room_id.empty() && input.room_id.find_first_of(",\n\r") != std::string::npos)
    return AppendStatus::invalid;
  Reading r = input;
  r.timestamp = floor<seconds>(r.timestamp);

  std::lock_guard lock(mu_);
  load_last(r.device_id);
  auto it = last_.find({r.device_id, r.metric});
  if (it != last_.end() && r.timestamp < it->second.timestamp) return AppendStatus::out_of_order;

  if (!r.room_id.empty()) remember_room(r.device_id, r.room_id);
  const int fd = open_for_append(r.device_id, r.timestamp);
  write_line(fd, format_row(r));
  if (r.room_id.empty() && rooms_.count(r.device_id)) r.room_id = rooms_.at(r.device_id);
  last_[{r.device_id, r.metric}] = std::move(r);
  return AppendStatus::ok;
}

std::vector<Reading> Store::query(const QueryRange& q) const {
  std::vector<Reading> out;
  if (q.to <= q.from) return out;
  const auto rooms = devices();
  const std::string first_date = format_date(q.from);
  const std::string last_date = format_date(q.to - milliseconds{1});

  std::vector<std::string> ids;
  const fs::path data = root_ / "data";
  if (q.device_id) {
    if (fs::is_directory(data / *q.device_id)) ids.push_back(*q.device_id);
  } else {
    for (const auto& dev : fs::directory_iterator(data))
      if (dev.is_directory()) ids.push_back(dev.path().filename().string());
    std::sort(ids.begin(), ids.end());
  }

  for (const auto& id : ids) {
    auto room_it = rooms.find(id);
    const std::string room = room_it == rooms.end() ? std::string{} : room_it->second;
    if (q.room_id && room != *q.room_id) continue;
    std::vector<fs::path> files;
    for (const auto& f : fs::directory_iterator(data / id)) {
      if (f.path().extension() != ".csv") continue;
      const std::string date = f.path().stem().string();
      if (date >= first_date && date <= last_date) files.push_back(f.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      for (auto& r : read_series_file(f)) {
        if (r.timestamp < q.from || r.timestamp >= q.to) continue;
        if (q.metric && r.metric != *q.metric) continue;
        r.room_id = room;
        out.push_back(std::move(r));
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Reading& a, const Reading& b) { return a.timestamp < b.timestamp; });
  return out;
}

std::vector<PlotPoint> Store::export_plot_series(const QueryRange& q, SimDuration bucket) const {
  if (bucket <= SimDuration::zero()) throw std::invalid_argument("bucket must be positive");
  std::map<std::int64_t, std::pair<double, std::size_t>> sums;
  for (const auto& r : query(q)) {
    const auto since = r.timestamp.time_since_epoch();
    auto k = since / bucket;
    if (since % bucket < SimDuration::zero()) --k;
    auto& [sum, n] = sums[k];
    sum += r.value;
    ++n;
  }
  std::vector<PlotPoint> out;
  out.reserve(sums.size());
  for (const auto& [k, acc] : sums)
    out.push_back(PlotPoint{SimInstant{bucket * k}, acc.first / static_cast<double>(acc.second),
                            acc.second});
  return out;
}

std::optional<Reading> Store::latest(const std::string& device_id, Metric metric) {
  std::lock_guard lock(mu_);
  load_last(device_id);
  auto it = last_.find({device_id, metric});
  if (it == last_.end()) return std::nullopt;
  return it->second;
}

std::map<std::string, std::string> Store::devices() const {
  std::lock_guard lock(mu_);
  return rooms_;
}

std::optional<std::string> Store::room_of(const std::string& device_id) const {
  std::lock_guard lock(mu_);
  auto it = rooms_.find(device_id);
  if (it == rooms_.end()) return std::nullopt;
  return it->second;
}

}  // namespace roomsense::tstore
