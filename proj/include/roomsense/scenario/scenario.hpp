#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "roomsense/analytics/comfort.hpp"
#include "roomsense/analytics/profile.hpp"
#include "roomsense/automation/engine.hpp"
#include "roomsense/meshnet/network.hpp"
#include "roomsense/net/socket.hpp"
#include "roomsense/protosim/sim_device.hpp"

namespace roomsense::scenario {

struct Diagnostic {
  int line = 0;  // 1-based; 0 when the position is unknown
  int column = 0;
  std::string message;
};

/// Scenario failed to parse or validate; carries every problem found.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string source, std::vector<Diagnostic> diagnostics);
  const std::string& source() const { return source_; }
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::string source_;
  std::vector<Diagnostic> diagnostics_;
};

/// "file:line:col: message"
std::string format_diagnostic(const std::string& source, const Diagnostic& d);

struct DeviceSpec {
  protosim::SimDeviceConfig sim;
  /// Where the device listens; simulate picks a free port when absent.
  std::optional<net::Endpoint> endpoint;
};

struct CameraSpec {
  std::string id;
  std::string room_id;
  std::vector<std::pair<SimInstant, int>> counts;  // sorted by instant
};

struct MeshSpec {
  meshnet::Topology topology;
  meshnet::MeshConfig config;
  meshnet::NodeId sink = 1;
};

struct Scenario {
  std::string name;
  SimInstant start{};
  SimDuration duration = sim_hours(24);
  double compression = 1440.0;
  bool paced = true;

  std::filesystem::path store = "store";
  net::Endpoint bind{"127.0.0.1", 8080};

  /// "stub" starts the built-in provider at `stub_temp_c`.
  std::optional<std::string> weather_url;
  double stub_temp_c = 10.0;
  SimDuration weather_interval = sim_seconds(600);

  std::vector<std::string> rooms;
  std::map<std::string, std::set<MacAddress>> tracked_macs;
  analytics::BandSet bands = analytics::default_bands();
  double light_threshold = analytics::kDefaultLightThreshold;
  double alpha = analytics::kDefaultAlpha;

  std::vector<DeviceSpec> devices;
  std::vector<CameraSpec> cameras;
  std::optional<MeshSpec> mesh;
  std::vector<automation::Rule> rules;

  SimInstant end() const { return start + duration; }
  /// Device ids of zwave_sim devices carrying the relay metric.
  std::set<std::string> relay_ids() const;
};

/// Parses and validates; throws ScenarioError with line-anchored diagnostics.
Scenario parse_scenario(std::string_view text, const std::string& source = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

/// "90s", "10m", "1h30m", "250ms", "2d", or a bare number of seconds.
std::optional<SimDuration> parse_duration(std::string_view text);

}  // namespace roomsense::scenario
