#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "roomsense/core/reading.hpp"

namespace roomsense::tstore {

struct StoreOptions {
  bool durable = true;  // fdatasync every row before append() returns
  bool recover = true;  // repair torn tails when the store is opened
};

enum class AppendStatus { ok, out_of_order, invalid };
std::string_view append_status_name(AppendStatus s);

/// Half-open [from, to). Unset filters match everything.
struct QueryRange {
  std::optional<std::string> device_id;
  std::optional<Metric> metric;
  std::optional<std::string> room_id;
  SimInstant from{};
  SimInstant to{};
};

struct PlotPoint {
  SimInstant bucket_start;
  double mean = 0.0;
  std::size_t count = 0;
};

struct RecoveryReport {
  std::vector<std::filesystem::path> repaired;
  std::size_t dropped_rows = 0;
};

/// Append-only CSV store laid out as {root}/data/{device_id}/{YYYY-MM-DD}.csv.
///
/// Rows carry no room; the device-to-room mapping lives in {root}/devices.csv and is
/// applied to query results. Each row is written with a single write() on an
/// O_APPEND descriptor, and readers ignore an unterminated trailing line, so a
/// concurrent reader never sees a torn row. Writers are serialized internally.
class Store {
 public:
  explicit Store(std::filesystem::path root, StoreOptions options = {});
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  const std::filesystem::path& root() const { return root_; }
  const RecoveryReport& recovery() const { return recovery_; }

  /// Timestamps are stored at whole-second precision (floored). A reading older
  /// than the last stored one for the same (device, metric) is OUT_OF_ORDER; one
  /// failing validate_reading() or with an unstorable id is rejected as invalid.
  /// I/O faults throw std::system_error.
  AppendStatus append(const Reading& r);

  std::vector<Reading> query(const QueryRange& q) const;
  /// Arithmetic mean per bucket; buckets are aligned to multiples of `bucket` since
  /// the Unix epoch and empty ones are omitted. Throws std::invalid_argument if
  /// bucket <= 0.
  std::vector<PlotPoint> export_plot_series(const QueryRange& q, SimDuration bucket) const;

  std::optional<Reading> latest(const std::string& device_id, Metric metric);
  /// device_id -> room_id for every device that has stored rows.
  std::map<std::string, std::string> devices() const;
  std::optional<std::string> room_of(const std::string& device_id) const;

  std::filesystem::path file_for(const std::string& device_id, SimInstant t) const;

 private:
  struct OpenFile {
    std::string date;
    int fd = -1;
  };

  void recover_all();
  void load_devices();
  void remember_room(const std::string& device_id, const std::string& room_id);
  void load_last(const std::string& device_id);
  int open_for_append(const std::string& device_id, SimInstant t);
  void write_line(int fd, std::string_view line);

  std::filesystem::path root_;
  StoreOptions options_;
  RecoveryReport recovery_;

  mutable std::mutex mu_;
  std::map<std::string, std::string> rooms_;
  std::set<std::string> loaded_;
  std::map<std::pair<std::string, Metric>, Reading> last_;
  std::map<std::string, OpenFile> open_;
};

/// Reads the complete rows of one daily file. Unterminated trailing text and
/// unparseable rows are skipped; the header is required.
std::vector<Reading> read_series_file(const std::filesystem::path& path);

}  // namespace roomsense::tstore
