#include "roomsense/analytics/weather.hpp"

#include <cmath>
#include <stdexcept>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

namespace roomsense::analytics {

std::string_view weather_error_name(WeatherError) { return "PROVIDER_UNAVAILABLE"; }

WeatherClient::WeatherClient(std::string url, std::chrono::milliseconds timeout, SimDuration cache_ttl)
    : url_(std::move(url)), timeout_(timeout), cache_ttl_(cache_ttl) {
  constexpr std::string_view scheme = "http://";
  std::string_view rest(url_);
  if (rest.substr(0, scheme.size()) != scheme) throw std::invalid_argument("weather url must start with http://");
  rest.remove_prefix(scheme.size());
  const auto slash = rest.find('/');
  auto ep = net::Endpoint::parse(rest.substr(0, slash));
  if (!ep || ep->port == 0) throw std::invalid_argument("weather url needs host:port");
  endpoint_ = *ep;
  path_ = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
}

std::optional<double> WeatherClient::request() {
  httplib::Client cli(endpoint_.host, endpoint_.port);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  auto res = cli.Get(path_);
  if (!res) {
    spdlog::warn("weather: {} unreachable ({})", url_, httplib::to_string(res.error()));
    return std::nullopt;
  }
  if (res->status != 200) {
    spdlog::warn("weather: {} answered HTTP {}", url_, res->status);
    return std::nullopt;
  }
  const auto body = nlohmann::json::parse(res->body, nullptr, false);
  if (body.is_discarded() || !body.is_object() || !body.contains("temp_c") || !body["temp_c"].is_number()) {
    spdlog::warn("weather: {} returned a bad payload", url_);
    return std::nullopt;
  }
  const double t = body["temp_c"].get<double>();
  if (!std::isfinite(t)) return std::nullopt;
  return t;
}

WeatherOutcome WeatherClient::fetch_outdoor(SimInstant now) {
  std::lock_guard lock(mu_);
  if (cached_ && now - fetched_at_ < cache_ttl_) return WeatherSample{*cached_, false};
  if (auto t = request()) {
    Reading r{std::string(kWeatherDeviceId), std::string(kWeatherRoomId), Metric::outdoor_temperature,
              std::round(*t * 100.0) / 100.0, now};
    if (is_valid(r)) {
      cached_ = r;
      fetched_at_ = now;
      return WeatherSample{r, false};
    }
    spdlog::warn("weather: {} out of range", *t);
  }
  if (cached_) return WeatherSample{*cached_, true};
  return WeatherError::provider_unavailable;
}

StubWeatherServer::StubWeatherServer(double temp_c, net::Endpoint bind)
    : server_(std::make_unique<httplib::Server>()), host_(bind.host), temp_c_(temp_c) {
  server_->Get("/weather", [this](const httplib::Request&, httplib::Response& res) {
    ++requests_;
    switch (mode_.load()) {
      case Mode::ok:
        res.set_content(nlohmann::json{{"temp_c", temp_c_.load()}}.dump(), "application/json");
        break;
      case Mode::down:
        res.status = 503;
        break;
      case Mode::bad_payload:
        res.set_content("{\"temperature\": \"cold\"}", "application/json");
        break;
    }
  });
  port_ = bind.port == 0 ? server_->bind_to_any_port(bind.host)
                         : (server_->bind_to_port(bind.host, bind.port) ? bind.port : -1);
  if (port_ <= 0) throw std::runtime_error("stub weather server could not bind " + bind.to_string());
  thread_ = std::thread([this] { server_->listen_after_bind(); });
}

StubWeatherServer::~StubWeatherServer() {
  // stop() is a no-op until the listen loop is running
  for (int i = 0; i < 2000 && !server_->is_running(); ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string StubWeatherServer::url() const {
  return "http://" + host_ + ":" + std::to_string(port_) + "/weather";
}

}  // namespace roomsense::analytics
