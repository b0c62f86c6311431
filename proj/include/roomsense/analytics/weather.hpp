#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <variant>

#include "roomsense/core/reading.hpp"
#include "roomsense/net/socket.hpp"

namespace httplib {
class Server;
}

namespace roomsense::analytics {

inline constexpr std::string_view kWeatherDeviceId = "weather";
inline constexpr std::string_view kWeatherRoomId = "outdoor";
inline constexpr SimDuration kWeatherCacheTtl = sim_seconds(600);

enum class WeatherError { provider_unavailable };
std::string_view weather_error_name(WeatherError e);

struct WeatherSample {
  Reading reading;     // metric outdoor_temperature, device "weather"
  bool stale = false;  // served from cache after a failed fetch
};
using WeatherOutcome = std::variant<WeatherSample, WeatherError>;

/// Fetches {"temp_c": number} from an HTTP endpoint and caches it for 600 sim-seconds.
/// Thread-safe.
class WeatherClient {
 public:
  /// `url` looks like http://host:port/path. Throws std::invalid_argument otherwise.
  WeatherClient(std::string url, std::chrono::milliseconds timeout = std::chrono::seconds(2),
                SimDuration cache_ttl = kWeatherCacheTtl);

  WeatherOutcome fetch_outdoor(SimInstant now);
  const std::string& url() const { return url_; }

 private:
  std::optional<double> request();

  std::string url_;
  net::Endpoint endpoint_;
  std::string path_;
  std::chrono::milliseconds timeout_;
  SimDuration cache_ttl_;

  std::mutex mu_;
  std::optional<Reading> cached_;
  SimInstant fetched_at_{};
};

/// Deterministic provider for tests and offline scenarios. Serves GET /weather.
class StubWeatherServer {
 public:
  enum class Mode { ok, down, bad_payload };

  explicit StubWeatherServer(double temp_c, net::Endpoint bind = {"127.0.0.1", 0});
  ~StubWeatherServer();
  StubWeatherServer(const StubWeatherServer&) = delete;
  StubWeatherServer& operator=(const StubWeatherServer&) = delete;

  std::string url() const;
  void set_temperature(double temp_c) { temp_c_ = temp_c; }
  void set_mode(Mode m) { mode_ = m; }
  int requests() const { return requests_; }

 private:
  std::unique_ptr<httplib::Server> server_;
  int port_ = 0;
  std::string host_;
  std::atomic<double> temp_c_;
  std::atomic<Mode> mode_{Mode::ok};
  std::atomic<int> requests_{0};
  std::thread thread_;
};

}  // namespace roomsense::analytics
