#include "roomsense/gateway/api.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "roomsense/gateway/json.hpp"

namespace roomsense::gateway {

using namespace std::chrono_literals;
using httplib::Request;
using httplib::Response;

namespace {

constexpr SimDuration kDefaultWindow = sim_hours(24);

void send_json(Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, {{"error", code}, {"message", message}}, status);
}

/// [from, to) from the query, defaulting to the 24 h before now.
std::optional<std::pair<SimInstant, SimInstant>> window(const Request& req, Response& res, SimInstant now) {
  SimInstant to = now + sim_seconds(1);
  if (req.has_param("to")) {
    auto t = parse_iso8601(req.get_param_value("to"));
    if (!t) {
      send_error(res, 400, "BAD_REQUEST", "'to' must be ISO-8601 UTC");
      return std::nullopt;
    }
    to = *t;
  }
  SimInstant from = to - kDefaultWindow;
  if (req.has_param("from")) {
    auto t = parse_iso8601(req.get_param_value("from"));
    if (!t) {
      send_error(res, 400, "BAD_REQUEST", "'from' must be ISO-8601 UTC");
      return std::nullopt;
    }
    from = *t;
  }
  if (to <= from) {
    send_error(res, 400, "BAD_REQUEST", "'from' must precede 'to'");
    return std::nullopt;
  }
  return std::make_pair(from, to);
}

std::optional<std::string> room_param(Gateway& gw, const Request& req, Response& res) {
  if (!req.has_param("room")) {
    send_error(res, 400, "BAD_REQUEST", "missing 'room'");
    return std::nullopt;
  }
  std::string room = req.get_param_value("room");
  if (!gw.has_room(room)) {
    send_error(res, 404, "UNKNOWN_ROOM", "no room '" + room + "'");
    return std::nullopt;
  }
  return room;
}

std::optional<Json> parse_body(const Request& req, Response& res) {
  try {
    return Json::parse(req.body);
  } catch (const Json::parse_error&) {
    send_error(res, 400, "BAD_REQUEST", "body is not valid JSON");
    return std::nullopt;
  }
}

Json device_json(Gateway& gw, const DeviceEntry& e, SimInstant now) {
  const auto& d = e.descriptor;
  Json metrics = Json::array();
  for (Metric m : d.metrics) metrics.push_back(metric_name(m));
  Json faults = Json::object();
  for (const auto& [f, n] : e.faults) faults[std::string(poll_fault_name(f))] = n;
  Json j{{"device_id", d.device_id},
         {"protocol", protocol_name(d.protocol)},
         {"address", format_address(d.address)},
         {"room_id", d.room_id},
         {"metrics", std::move(metrics)},
         {"liveness", liveness_name(e.liveness(now))},
         {"last_seen", e.last_seen ? Json(format_iso8601(*e.last_seen)) : Json(nullptr)},
         {"faults", std::move(faults)},
         {"consecutive_faults", e.consecutive_faults},
         {"polling_suspended", e.suspended}};
  if (auto relay = gw.engine().relay(d.device_id)) j["relay"] = relay_json(*relay);
  return j;
}

}  // namespace

ApiServer::ApiServer(Gateway& gateway, const net::Endpoint& bind)
    : gw_(gateway), server_(std::make_unique<httplib::Server>()) {
  server_->set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  routes();
  int port = bind.port;
  if (bind.port == 0) {
    port = server_->bind_to_any_port(bind.host);
  } else if (!server_->bind_to_port(bind.host, bind.port)) {
    port = -1;
  }
  if (port <= 0) throw net::NetError("cannot bind API to " + bind.to_string());
  endpoint_ = {bind.host, static_cast<std::uint16_t>(port)};
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  while (!server_->is_running()) std::this_thread::sleep_for(1ms);
  spdlog::info("api listening on http://{}", endpoint_.to_string());
}

ApiServer::~ApiServer() { stop(); }

void ApiServer::stop() {
  if (!thread_.joinable()) return;
  gw_.stream().close();  // ends held-open stream responses
  server_->stop();
  thread_.join();
}

void ApiServer::routes() {
  auto& s = *server_;
  Gateway& gw = gw_;

  s.Options(R"(/api/v1/.*)", [](const Request&, Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  s.Get("/api/v1/rooms", [&gw](const Request&, Response& res) {
    Json rooms = Json::array();
    for (const auto& r : gw.rooms()) rooms.push_back(r);
    send_json(res, rooms);
  });

  s.Get("/api/v1/devices", [&gw](const Request&, Response& res) {
    const SimInstant now = gw.clock().now();
    Json out = Json::array();
    for (const auto& e : gw.registry().list()) out.push_back(device_json(gw, e, now));
    for (const auto& [id, room] : gw.cameras())
      out.push_back({{"device_id", id}, {"protocol", "camera"}, {"room_id", room}, {"metrics", {"camera_count"}}});
    send_json(res, out);
  });

  s.Get("/api/v1/readings/latest", [&gw](const Request& req, Response& res) {
    auto room = room_param(gw, req, res);
    if (!room) return;
    Json out = Json::array();
    for (const auto& r : gw.latest_for_room(*room)) out.push_back(reading_json(r));
    send_json(res, out);
  });

  s.Get("/api/v1/readings", [&gw](const Request& req, Response& res) {
    tstore::QueryRange q;
    if (req.has_param("device")) {
      q.device_id = req.get_param_value("device");
      if (!gw.has_device(*q.device_id) && !gw.store().room_of(*q.device_id)) {
        send_error(res, 404, "UNKNOWN_DEVICE", "no device '" + *q.device_id + "'");
        return;
      }
    }
    if (req.has_param("metric")) {
      q.metric = parse_metric(req.get_param_value("metric"));
      if (!q.metric) {
        send_error(res, 400, "BAD_REQUEST", "unknown metric");
        return;
      }
    }
    if (req.has_param("room")) {
      q.room_id = req.get_param_value("room");
      if (!gw.has_room(*q.room_id)) {
        send_error(res, 404, "UNKNOWN_ROOM", "no room '" + *q.room_id + "'");
        return;
      }
    }
    auto w = window(req, res, gw.clock().now());
    if (!w) return;
    q.from = w->first;
    q.to = w->second;
    Json out = Json::array();
    for (const auto& r : gw.store().query(q)) out.push_back(reading_json(r));
    send_json(res, out);
  });

  s.Get("/api/v1/comfort", [&gw](const Request& req, Response& res) {
    auto room = room_param(gw, req, res);
    if (!room) return;
    auto w = window(req, res, gw.clock().now());
    if (!w) return;
    Json j = comfort_json(gw.comfort(*room, w->first, w->second), gw.bands(), gw.light_threshold());
    j["from"] = format_iso8601(w->first);
    j["to"] = format_iso8601(w->second);
    send_json(res, j);
  });

  s.Get("/api/v1/occupancy", [&gw](const Request& req, Response& res) {
    auto room = room_param(gw, req, res);
    if (!room) return;
    send_json(res, occupancy_json(*room, gw.occupancy(*room), gw.occupancy_count(*room)));
  });

  s.Get("/api/v1/predictions", [&gw](const Request& req, Response& res) {
    auto room = room_param(gw, req, res);
    if (!room) return;
    if (!req.has_param("metric")) {
      send_error(res, 400, "BAD_REQUEST", "missing 'metric'");
      return;
    }
    const auto metric = parse_metric(req.get_param_value("metric"));
    if (!metric) {
      send_error(res, 400, "BAD_REQUEST", "unknown metric");
      return;
    }
    const int current = hour_of_day(gw.clock().now());
    Json hours = Json::array();
    for (int h = 0; h < 24; ++h) {
      const auto slot = gw.profile().slot(*room, *metric, h);
      hours.push_back({{"hour", h},
                       {"value", slot ? Json(slot->s) : Json(nullptr)},
                       {"samples", slot ? slot->count : 0}});
    }
    const auto now_value = gw.profile().predict(*room, *metric, current);
    send_json(res, {{"room_id", *room},
                    {"metric", metric_name(*metric)},
                    {"unit", canonical_unit(*metric)},
                    {"current_hour", current},
                    {"current", now_value ? Json(*now_value) : Json(nullptr)},
                    {"hours", std::move(hours)}});
  });

  s.Get("/api/v1/stream", [&gw](const Request&, Response& res) {
    auto sub = gw.stream().subscribe();
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("application/x-ndjson", [sub](std::size_t, httplib::DataSink& sink) {
      for (;;) {
        if (sub->closed()) {
          sink.done();
          return true;
        }
        if (!sink.is_writable()) return false;
        auto line = sub->next(200ms);
        if (!line) continue;
        *line += '\n';
        if (!sink.write(line->data(), line->size())) return false;
        return true;
      }
    });
  });

  s.Get("/api/v1/relays", [&gw](const Request&, Response& res) {
    Json out = Json::array();
    for (const auto& r : gw.engine().relays()) out.push_back(relay_json(r));
    send_json(res, out);
  });

  s.Post(R"(/api/v1/relays/([^/]+))", [&gw](const Request& req, Response& res) {
    const std::string id = req.matches[1];
    if (!gw.engine().relay(id)) {
      send_error(res, 404, "UNKNOWN_RELAY", "no relay '" + id + "'");
      return;
    }
    auto body = parse_body(req, res);
    if (!body) return;
    if (!body->is_object()) {
      send_error(res, 400, "BAD_REQUEST", "body must be an object");
      return;
    }
    const auto mode_text = body->value("mode", std::string("manual"));
    const auto mode = parse_operator_mode(mode_text);
    if (!mode) {
      send_error(res, 400, "BAD_REQUEST", "mode must be manual, auto or clear");
      return;
    }
    std::optional<bool> on;
    if (body->contains("state")) {
      const auto& st = (*body)["state"];
      if (!st.is_string() || (st != "on" && st != "off")) {
        send_error(res, 400, "BAD_REQUEST", "state must be \"on\" or \"off\"");
        return;
      }
      on = st == "on";
    }
    if (*mode == OperatorMode::manual && !on) {
      send_error(res, 400, "BAD_REQUEST", "manual mode needs a state");
      return;
    }
    auto result = gw.set_relay(id, *mode, on);
    if (auto* err = std::get_if<automation::AutomationError>(&result)) {
      const int status = *err == automation::AutomationError::manual_conflict ? 409 : 404;
      send_error(res, status, automation::automation_error_name(*err),
                 status == 409 ? "an opposite manual override is active" : "no such relay");
      return;
    }
    const auto& r = std::get<RelayResult>(result);
    Json j = relay_json(r.state);
    j["frame_sent"] = r.frame_sent;
    send_json(res, j);
  });

  s.Get("/api/v1/comfort-bands", [&gw](const Request&, Response& res) {
    Json out = Json::array();
    for (const auto& [m, b] : gw.bands()) out.push_back(band_json(b));
    send_json(res, out);
  });

  s.Put("/api/v1/comfort-bands", [&gw](const Request& req, Response& res) {
    auto body = parse_body(req, res);
    if (!body) return;
    const Json items = body->is_array() ? *body : Json::array({*body});
    std::vector<analytics::ComfortBand> bands;
    for (const auto& item : items) {
      std::string error;
      auto b = band_from_json(item, error);
      if (!b) {
        send_error(res, 400, "BAD_REQUEST", error);
        return;
      }
      bands.push_back(*b);
    }
    // Validated as a whole before any band changes.
    for (const auto& b : bands) gw.set_band(b);
    Json out = Json::array();
    for (const auto& [m, b] : gw.bands()) out.push_back(band_json(b));
    send_json(res, out);
  });

  s.Post("/api/v1/feedback", [&gw](const Request& req, Response& res) {
    auto body = parse_body(req, res);
    if (!body) return;
    if (!body->is_object() || !body->contains("room") || !(*body)["room"].is_string() ||
        !body->contains("vote") || !(*body)["vote"].is_number_integer() ||
        (body->contains("note") && !(*body)["note"].is_string())) {
      send_error(res, 400, "BAD_REQUEST", "expected {\"room\": string, \"vote\": -1|0|1, \"note\": string}");
      return;
    }
    analytics::FeedbackRecord f{(*body)["room"].get<std::string>(), (*body)["vote"].get<int>(),
                                body->value("note", std::string{}), gw.clock().now()};
    if (!analytics::is_valid(f)) {
      send_error(res, 400, "BAD_REQUEST", "vote must be -1, 0 or 1");
      return;
    }
    if (!gw.has_room(f.room_id)) {
      send_error(res, 404, "UNKNOWN_ROOM", "no room '" + f.room_id + "'");
      return;
    }
    gw.add_feedback(f);
    send_json(res, feedback_json(f), 201);
  });

  s.Get("/api/v1/feedback", [&gw](const Request& req, Response& res) {
    const auto room = req.has_param("room") ? std::optional(req.get_param_value("room")) : std::nullopt;
    Json out = Json::array();
    for (const auto& f : gw.feedback())
      if (!room || f.room_id == *room) out.push_back(feedback_json(f));
    send_json(res, out);
  });

  s.set_exception_handler([](const Request& req, Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    spdlog::error("api {} {}: {}", req.method, req.path, what);
    send_error(res, 500, "INTERNAL", what);
  });
}

}  // namespace roomsense::gateway
