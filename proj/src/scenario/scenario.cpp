#include "roomsense/scenario/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace roomsense::scenario {

namespace {

std::string join_messages(const std::string& source, const std::vector<Diagnostic>& diags) {
  std::string out;
  for (const auto& d : diags) {
    if (!out.empty()) out += '\n';
    out += format_diagnostic(source, d);
  }
  return out;
}

}  // namespace

ScenarioError::ScenarioError(std::string source, std::vector<Diagnostic> diagnostics)
    : std::runtime_error(join_messages(source, diagnostics)),
      source_(std::move(source)),
      diagnostics_(std::move(diagnostics)) {}

std::string format_diagnostic(const std::string& source, const Diagnostic& d) {
  if (d.line <= 0) return fmt::format("{}: {}", source, d.message);
  return fmt::format("{}:{}:{}: {}", source, d.line, d.column, d.message);
}

std::set<std::string> Scenario::relay_ids() const {
  std::set<std::string> out;
  for (const auto& d : devices) {
    const auto& desc = d.sim.descriptor;
    if (desc.protocol == Protocol::zwave_sim &&
        std::find(desc.metrics.begin(), desc.metrics.end(), Metric::relay) != desc.metrics.end())
      out.insert(desc.device_id);
  }
  return out;
}

std::optional<SimDuration> parse_duration(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double plain = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), plain);
  if (ec == std::errc{} && p == text.data() + text.size())
    return plain < 0 ? std::nullopt : std::optional(SimDuration{static_cast<std::int64_t>(plain * 1000.0)});

  double total_ms = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    double v = 0;
    auto [end, err] = std::from_chars(text.data() + i, text.data() + text.size(), v);
    if (err != std::errc{} || v < 0) return std::nullopt;
    i = static_cast<std::size_t>(end - text.data());
    std::size_t j = i;
    while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
    const auto unit = text.substr(i, j - i);
    i = j;
    if (unit == "ms") total_ms += v;
    else if (unit == "s") total_ms += v * 1e3;
    else if (unit == "m" || unit == "min") total_ms += v * 60e3;
    else if (unit == "h") total_ms += v * 3600e3;
    else if (unit == "d") total_ms += v * 86400e3;
    else return std::nullopt;
  }
  return SimDuration{static_cast<std::int64_t>(total_ms)};
}

namespace {

/// Collects diagnostics while reading typed values out of YAML nodes.
class Reader {
 public:
  explicit Reader(SimInstant start = {}) : start_(start) {}

  std::vector<Diagnostic> diags;

  void error(const YAML::Node& at, std::string msg) {
    const auto m = at.Mark();
    if (m.is_null())
      diags.push_back({0, 0, std::move(msg)});
    else
      diags.push_back({m.line + 1, m.column + 1, std::move(msg)});
  }

  void set_start(SimInstant s) { start_ = s; }

  /// Flags keys outside `allowed`; returns false for a non-map.
  bool expect_map(const YAML::Node& n, std::string_view what, std::initializer_list<std::string_view> allowed) {
    if (!n.IsMap()) {
      error(n, fmt::format("{} must be a mapping", what));
      return false;
    }
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        error(kv.first, fmt::format("unknown key '{}' in {}", key, what));
    }
    return true;
  }

  bool expect_seq(const YAML::Node& n, std::string_view what) {
    if (!n.IsSequence()) {
      error(n, fmt::format("{} must be a list", what));
      return false;
    }
    return true;
  }

  /// Required child; reports against the parent when missing.
  std::optional<YAML::Node> need(const YAML::Node& parent, const char* key, std::string_view what) {
    const YAML::Node n = parent[key];
    if (!n) {
      error(parent, fmt::format("{} needs '{}'", what, key));
      return std::nullopt;
    }
    return n;
  }

  std::optional<std::string> str(const YAML::Node& n, std::string_view what) {
    if (!n.IsScalar()) {
      error(n, fmt::format("{} must be a scalar", what));
      return std::nullopt;
    }
    return n.Scalar();
  }

  std::optional<double> number(const YAML::Node& n, std::string_view what) {
    if (n.IsScalar()) {
      double v = 0;
      if (YAML::convert<double>::decode(n, v) && std::isfinite(v)) return v;
    }
    error(n, fmt::format("{} must be a number", what));
    return std::nullopt;
  }

  std::optional<std::int64_t> integer(const YAML::Node& n, std::string_view what, std::int64_t lo, std::int64_t hi) {
    if (n.IsScalar()) {
      const std::string& s = n.Scalar();
      std::int64_t v = 0;
      const bool hex = s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X');
      const char* b = s.data() + (hex ? 2 : 0);
      auto [p, ec] = std::from_chars(b, s.data() + s.size(), v, hex ? 16 : 10);
      if (ec == std::errc{} && p == s.data() + s.size()) {
        if (v >= lo && v <= hi) return v;
        error(n, fmt::format("{} must be within {}..{}", what, lo, hi));
        return std::nullopt;
      }
    }
    error(n, fmt::format("{} must be an integer", what));
    return std::nullopt;
  }

  std::optional<bool> boolean(const YAML::Node& n, std::string_view what) {
    bool v = false;
    if (n.IsScalar() && YAML::convert<bool>::decode(n, v)) return v;
    error(n, fmt::format("{} must be true or false", what));
    return std::nullopt;
  }

  std::optional<SimDuration> duration(const YAML::Node& n, std::string_view what) {
    if (n.IsScalar())
      if (auto d = parse_duration(n.Scalar())) return d;
    error(n, fmt::format("{} must be a duration such as 60s, 10m or 1h30m", what));
    return std::nullopt;
  }

  /// ISO-8601 instant, or an offset from the scenario start.
  std::optional<SimInstant> instant(const YAML::Node& n, std::string_view what) {
    if (n.IsScalar()) {
      if (auto t = parse_iso8601(n.Scalar())) return t;
      std::string_view s = n.Scalar();
      if (!s.empty() && s.front() == '+') s.remove_prefix(1);
      if (auto d = parse_duration(s)) return start_ + *d;
    }
    error(n, fmt::format("{} must be an ISO-8601 instant or an offset from the start", what));
    return std::nullopt;
  }

  std::optional<Metric> metric(const YAML::Node& n, std::string_view what) {
    if (n.IsScalar())
      if (auto m = parse_metric(n.Scalar())) return m;
    error(n, fmt::format("unknown metric '{}' in {}", n.IsScalar() ? n.Scalar() : "?", what));
    return std::nullopt;
  }

  std::optional<MacAddress> mac(const YAML::Node& n, std::string_view what) {
    if (n.IsScalar())
      if (auto m = MacAddress::parse(n.Scalar())) return m;
    error(n, fmt::format("{} must be a MAC address like AA:BB:CC:DD:EE:FF", what));
    return std::nullopt;
  }

  std::optional<net::Endpoint> endpoint(const YAML::Node& n, std::string_view what) {
    if (n.IsScalar())
      if (auto e = net::Endpoint::parse(n.Scalar())) return e;
    error(n, fmt::format("{} must look like host:port", what));
    return std::nullopt;
  }

 private:
  SimInstant start_;
};

protosim::SignalModel parse_signal(Reader& r, const YAML::Node& n, const std::string& where) {
  protosim::SignalModel m;
  if (!r.expect_map(n, where, {"baseline", "amplitude", "period", "peak", "sigma", "seed", "min", "max"})) return m;
  if (auto b = r.need(n, "baseline", where))
    if (auto v = r.number(*b, where + ".baseline")) m.baseline = *v;
  if (n["amplitude"]) m.amplitude = r.number(n["amplitude"], where + ".amplitude").value_or(0.0);
  if (n["period"]) {
    m.period = r.duration(n["period"], where + ".period").value_or(m.period);
    if (m.period <= SimDuration::zero()) r.error(n["period"], where + ".period must be positive");
  }
  if (n["peak"]) m.peak_offset = r.duration(n["peak"], where + ".peak").value_or(m.peak_offset);
  if (n["sigma"]) {
    m.noise_sigma = r.number(n["sigma"], where + ".sigma").value_or(0.0);
    if (m.noise_sigma < 0) r.error(n["sigma"], where + ".sigma must not be negative");
  }
  if (n["seed"]) m.seed = static_cast<std::uint64_t>(r.integer(n["seed"], where + ".seed", 0, INT64_MAX).value_or(0));
  if (n["min"]) m.min = r.number(n["min"], where + ".min");
  if (n["max"]) m.max = r.number(n["max"], where + ".max");
  if (m.min && m.max && *m.min > *m.max) r.error(n, where + ": min exceeds max");
  return m;
}

std::optional<automation::Condition> parse_condition(Reader& r, const YAML::Node& n, const std::string& where) {
  if (!r.expect_map(n, where, {"metric", "op", "value", "hysteresis", "occupancy", "time"})) return std::nullopt;
  if (n["occupancy"]) {
    // occupancy: "== 0"
    auto text = r.str(n["occupancy"], where + ".occupancy");
    if (!text) return std::nullopt;
    std::istringstream in(*text);
    std::string op;
    int count = -1;
    in >> op >> count;
    const auto cmp = automation::parse_comparator(op);
    if (!cmp || count < 0 || !in.eof()) {
      r.error(n["occupancy"], where + ".occupancy must look like \"== 0\" or \">= 1\"");
      return std::nullopt;
    }
    return automation::OccupancyCondition{*cmp, count};
  }
  if (n["time"]) {
    // time: "18:00-07:00"
    auto text = r.str(n["time"], where + ".time");
    if (!text) return std::nullopt;
    int h1, m1, h2, m2;
    char c1, dash, c2;
    std::istringstream in(*text);
    if (!(in >> h1 >> c1 >> m1 >> dash >> h2 >> c2 >> m2) || c1 != ':' || c2 != ':' || dash != '-' ||
        h1 < 0 || h1 > 24 || h2 < 0 || h2 > 24 || m1 < 0 || m1 > 59 || m2 < 0 || m2 > 59) {
      r.error(n["time"], where + ".time must look like \"HH:MM-HH:MM\"");
      return std::nullopt;
    }
    return automation::TimeOfDayCondition{sim_hours(h1) + sim_minutes(m1), sim_hours(h2) + sim_minutes(m2)};
  }
  automation::MetricCondition c;
  auto mn = r.need(n, "metric", where);
  if (!mn) return std::nullopt;
  auto metric = r.metric(*mn, where);
  std::optional<automation::Comparator> cmp;
  if (auto op = r.need(n, "op", where)) {
    if (auto s = r.str(*op, where + ".op")) {
      cmp = automation::parse_comparator(*s);
      if (!cmp) r.error(*op, where + ".op must be one of < <= > >= ==");
    }
  }
  std::optional<double> value;
  if (auto v = r.need(n, "value", where)) value = r.number(*v, where + ".value");
  if (!metric || !cmp || !value) return std::nullopt;
  c.metric = *metric;
  c.cmp = *cmp;
  c.threshold = *value;
  if (n["hysteresis"]) {
    c.hysteresis = r.number(n["hysteresis"], where + ".hysteresis").value_or(0.0);
    if (c.hysteresis < 0) r.error(n["hysteresis"], where + ".hysteresis must not be negative");
  }
  return c;
}

bool contains(const std::vector<Metric>& v, Metric m) { return std::find(v.begin(), v.end(), m) != v.end(); }

const std::vector<Metric> kSensorMetrics{Metric::temperature, Metric::humidity, Metric::light, Metric::pressure};
const std::vector<Metric> kZwaveMetrics{Metric::door, Metric::motion, Metric::relay};

}  // namespace

Scenario parse_scenario(std::string_view text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(source, {{e.mark.line + 1, e.mark.column + 1, e.msg}});
  }

  Scenario sc;
  Reader r;
  if (!root.IsMap()) throw ScenarioError(source, {{1, 1, "scenario must be a mapping"}});
  r.expect_map(root, "scenario",
               {"name", "clock", "store", "api", "weather", "rooms", "bands", "light_threshold", "alpha", "devices",
                "cameras", "mesh", "rules"});

  if (root["name"]) sc.name = r.str(root["name"], "name").value_or("");

  // clock first: event offsets are relative to its start.
  if (auto clock = r.need(root, "clock", "scenario")) {
    if (r.expect_map(*clock, "clock", {"start", "duration", "compression", "paced"})) {
      if (auto s = r.need(*clock, "start", "clock")) {
        if (s->IsScalar() && parse_iso8601(s->Scalar()))
          sc.start = *parse_iso8601(s->Scalar());
        else
          r.error(*s, "clock.start must be an ISO-8601 instant");
      }
      if ((*clock)["duration"]) {
        sc.duration = r.duration((*clock)["duration"], "clock.duration").value_or(sc.duration);
        if (sc.duration <= SimDuration::zero()) r.error((*clock)["duration"], "clock.duration must be positive");
      }
      if ((*clock)["compression"]) {
        sc.compression = r.number((*clock)["compression"], "clock.compression").value_or(sc.compression);
        if (sc.compression <= 0) r.error((*clock)["compression"], "clock.compression must be positive");
      }
      if ((*clock)["paced"]) sc.paced = r.boolean((*clock)["paced"], "clock.paced").value_or(true);
    }
  }
  r.set_start(sc.start);

  if (root["store"]) sc.store = r.str(root["store"], "store").value_or("store");
  if (const auto api = root["api"]) {
    if (r.expect_map(api, "api", {"bind"}) && api["bind"])
      sc.bind = r.endpoint(api["bind"], "api.bind").value_or(sc.bind);
  }
  if (const auto w = root["weather"]) {
    if (r.expect_map(w, "weather", {"url", "temp_c", "interval"})) {
      if (auto u = r.need(w, "url", "weather")) {
        sc.weather_url = r.str(*u, "weather.url");
        if (sc.weather_url && *sc.weather_url != "stub" && sc.weather_url->rfind("http://", 0) != 0)
          r.error(*u, "weather.url must be \"stub\" or an http:// URL");
      }
      if (w["temp_c"]) sc.stub_temp_c = r.number(w["temp_c"], "weather.temp_c").value_or(sc.stub_temp_c);
      if (w["interval"]) {
        sc.weather_interval = r.duration(w["interval"], "weather.interval").value_or(sc.weather_interval);
        if (sc.weather_interval <= SimDuration::zero()) r.error(w["interval"], "weather.interval must be positive");
      }
    }
  }
  if (root["light_threshold"]) sc.light_threshold = r.number(root["light_threshold"], "light_threshold").value_or(300);
  if (root["alpha"]) {
    sc.alpha = r.number(root["alpha"], "alpha").value_or(analytics::kDefaultAlpha);
    if (!(sc.alpha > 0 && sc.alpha < 1)) r.error(root["alpha"], "alpha must be in (0, 1)");
  }

  // rooms
  std::set<std::string> rooms;
  if (auto rs = r.need(root, "rooms", "scenario"); rs && r.expect_seq(*rs, "rooms")) {
    for (const auto& n : *rs) {
      std::string id;
      if (n.IsScalar()) {
        id = n.Scalar();
      } else if (r.expect_map(n, "room", {"id", "tracked_macs"})) {
        if (auto idn = r.need(n, "id", "room")) id = r.str(*idn, "room.id").value_or("");
        if (n["tracked_macs"] && r.expect_seq(n["tracked_macs"], "room.tracked_macs"))
          for (const auto& m : n["tracked_macs"])
            if (auto mac = r.mac(m, "tracked MAC")) sc.tracked_macs[id].insert(*mac);
      }
      if (id.empty()) continue;
      if (!rooms.insert(id).second) r.error(n, fmt::format("duplicate room '{}'", id));
      else sc.rooms.push_back(id);
    }
  }
  const auto check_room = [&](const YAML::Node& n, const std::string& room, std::string_view owner) {
    if (!rooms.count(room)) r.error(n, fmt::format("unknown room '{}' referenced by {}", room, owner));
  };

  // bands
  if (const auto bs = root["bands"]; bs && r.expect_seq(bs, "bands")) {
    for (const auto& n : bs) {
      if (!r.expect_map(n, "band", {"metric", "lo", "hi", "span"})) continue;
      analytics::ComfortBand b;
      auto m = r.need(n, "metric", "band");
      auto lo = r.need(n, "lo", "band");
      auto hi = r.need(n, "hi", "band");
      if (!m || !lo || !hi) continue;
      auto metric = r.metric(*m, "band");
      auto lov = r.number(*lo, "band.lo");
      auto hiv = r.number(*hi, "band.hi");
      if (!metric || !lov || !hiv) continue;
      b = {*metric, *lov, *hiv, 1.0};
      if (auto it = sc.bands.find(*metric); it != sc.bands.end()) b.span = it->second.span;
      if (n["span"]) b.span = r.number(n["span"], "band.span").value_or(b.span);
      try {
        analytics::validate_band(b);
        sc.bands[b.metric] = b;
      } catch (const std::invalid_argument& e) {
        r.error(n, fmt::format("invalid band: {}", e.what()));
      }
    }
  }

  // mesh (before devices so zigbee addresses can be checked)
  std::optional<YAML::Node> mesh_node;
  if (const auto mn = root["mesh"]) {
    mesh_node = mn;
    if (r.expect_map(mn, "mesh", {"sink", "nodes", "links", "ttl", "discovery_timeout", "route_ttl", "retries", "seed"})) {
      MeshSpec m;
      std::set<meshnet::NodeId> nodes;
      if (auto ns = r.need(mn, "nodes", "mesh"); ns && r.expect_seq(*ns, "mesh.nodes")) {
        for (const auto& n : *ns)
          if (auto id = r.integer(n, "mesh node", 0, 0xFFFE)) {
            if (!nodes.insert(static_cast<meshnet::NodeId>(*id)).second)
              r.error(n, fmt::format("duplicate mesh node {}", *id));
            m.topology.add_node(static_cast<meshnet::NodeId>(*id));
          }
      }
      if (auto s = r.need(mn, "sink", "mesh"))
        if (auto id = r.integer(*s, "mesh.sink", 0, 0xFFFE)) {
          m.sink = static_cast<meshnet::NodeId>(*id);
          if (!nodes.count(m.sink)) r.error(*s, fmt::format("mesh sink {} is not a mesh node", *id));
        }
      if (mn["links"] && r.expect_seq(mn["links"], "mesh.links")) {
        for (const auto& l : mn["links"]) {
          if (!r.expect_map(l, "mesh link", {"a", "b", "loss", "latency"})) continue;
          auto a = r.need(l, "a", "mesh link");
          auto b = r.need(l, "b", "mesh link");
          if (!a || !b) continue;
          auto av = r.integer(*a, "mesh link end", 0, 0xFFFE);
          auto bv = r.integer(*b, "mesh link end", 0, 0xFFFE);
          if (!av || !bv) continue;
          bool ok = true;
          for (auto [node, v] : {std::pair{*a, *av}, std::pair{*b, *bv}})
            if (!nodes.count(static_cast<meshnet::NodeId>(v))) {
              r.error(node, fmt::format("mesh link references unknown mesh node {}", v));
              ok = false;
            }
          meshnet::LinkParams p;
          if (l["loss"]) p.loss = r.number(l["loss"], "mesh link loss").value_or(0.0);
          if (l["latency"]) p.latency = r.duration(l["latency"], "mesh link latency").value_or(SimDuration{});
          if (!ok) continue;
          try {
            m.topology.add_link(static_cast<meshnet::NodeId>(*av), static_cast<meshnet::NodeId>(*bv), p);
          } catch (const std::invalid_argument& e) {
            r.error(l, fmt::format("invalid mesh link: {}", e.what()));
          }
        }
      }
      if (mn["ttl"]) m.config.initial_ttl = static_cast<std::uint8_t>(r.integer(mn["ttl"], "mesh.ttl", 1, 255).value_or(8));
      if (mn["discovery_timeout"])
        m.config.discovery_timeout = r.duration(mn["discovery_timeout"], "mesh.discovery_timeout").value_or(m.config.discovery_timeout);
      if (mn["route_ttl"]) m.config.route_ttl = r.duration(mn["route_ttl"], "mesh.route_ttl").value_or(m.config.route_ttl);
      if (mn["retries"]) m.config.retries = static_cast<int>(r.integer(mn["retries"], "mesh.retries", 0, 16).value_or(3));
      if (mn["seed"]) m.config.seed = static_cast<std::uint64_t>(r.integer(mn["seed"], "mesh.seed", 0, INT64_MAX).value_or(1));
      sc.mesh = std::move(m);
    }
  }

  // devices
  std::set<std::string> ids;
  std::map<std::int64_t, std::string> zwave_nodes, mesh_nodes;
  std::set<MacAddress> macs;
  if (auto ds = r.need(root, "devices", "scenario"); ds && r.expect_seq(*ds, "devices")) {
    for (const auto& n : *ds) {
      if (!r.expect_map(n, "device", {"id", "protocol", "address", "room", "metrics", "poll_interval", "endpoint",
                                      "signals", "scan", "events", "report_interval"}))
        continue;
      DeviceSpec spec;
      auto& desc = spec.sim.descriptor;
      auto idn = r.need(n, "id", "device");
      auto pn = r.need(n, "protocol", "device");
      auto an = r.need(n, "address", "device");
      auto rn = r.need(n, "room", "device");
      if (!idn || !pn || !an || !rn) continue;
      desc.device_id = r.str(*idn, "device.id").value_or("");
      const std::string where = "device '" + desc.device_id + "'";
      if (!desc.device_id.empty() && !ids.insert(desc.device_id).second)
        r.error(*idn, fmt::format("duplicate device id '{}'", desc.device_id));
      const auto proto = pn->IsScalar() ? parse_protocol(pn->Scalar()) : std::nullopt;
      if (!proto) {
        r.error(*pn, "protocol must be ble_sim, zwave_sim or zigbee_sim");
        continue;
      }
      desc.protocol = *proto;
      desc.room_id = r.str(*rn, "device.room").value_or("");
      check_room(*rn, desc.room_id, where);

      switch (desc.protocol) {
        case Protocol::ble_sim:
          if (auto mac = r.mac(*an, where + " address")) {
            desc.address = *mac;
            if (!macs.insert(*mac).second) r.error(*an, fmt::format("duplicate address {}", mac->to_string()));
          }
          break;
        case Protocol::zwave_sim:
          if (auto id = r.integer(*an, where + " address", 1, 232)) {
            desc.address = ZwaveNodeId{static_cast<std::uint8_t>(*id)};
            if (!zwave_nodes.emplace(*id, desc.device_id).second)
              r.error(*an, fmt::format("duplicate zwave node {}", *id));
          }
          break;
        case Protocol::zigbee_sim:
          if (auto id = r.integer(*an, where + " address", 0, 0xFFFE)) {
            desc.address = MeshNodeId{static_cast<std::uint16_t>(*id)};
            if (!mesh_nodes.emplace(*id, desc.device_id).second)
              r.error(*an, fmt::format("duplicate mesh node {}", *id));
            if (!sc.mesh)
              r.error(*an, fmt::format("{} is a zigbee_sim device but the scenario has no mesh", where));
            else if (!sc.mesh->topology.has_node(static_cast<meshnet::NodeId>(*id)))
              r.error(*an, fmt::format("{} uses mesh node {} which is not in mesh.nodes", where, *id));
            else if (static_cast<meshnet::NodeId>(*id) == sc.mesh->sink)
              r.error(*an, fmt::format("{} cannot sit on the mesh sink", where));
          }
          break;
      }

      if (n["signals"] && r.expect_map(n["signals"], where + " signals",
                                       {"temperature", "humidity", "light", "pressure"})) {
        for (const auto& kv : n["signals"]) {
          const auto m = parse_metric(kv.first.as<std::string>());
          if (m) spec.sim.signals[*m] = parse_signal(r, kv.second, where + " signal " + kv.first.as<std::string>());
        }
      }
      if (n["metrics"] && r.expect_seq(n["metrics"], where + " metrics")) {
        for (const auto& m : n["metrics"])
          if (auto metric = r.metric(m, where)) {
            const auto& allowed = desc.protocol == Protocol::zwave_sim ? kZwaveMetrics : kSensorMetrics;
            if (!contains(allowed, *metric))
              r.error(m, fmt::format("{} cannot report {}", where, metric_name(*metric)));
            else if (!contains(desc.metrics, *metric))
              desc.metrics.push_back(*metric);
          }
      } else {
        for (const auto& [m, model] : spec.sim.signals) desc.metrics.push_back(m);
      }
      if (desc.protocol != Protocol::zwave_sim) {
        for (Metric m : desc.metrics)
          if (!spec.sim.signals.count(m)) r.error(n, fmt::format("{} reports {} but has no signal for it", where, metric_name(m)));
      } else if (!spec.sim.signals.empty()) {
        r.error(n["signals"], fmt::format("{} is a push device; signals do not apply", where));
      }
      if (desc.metrics.empty()) r.error(n, fmt::format("{} reports no metrics", where));

      if (n["poll_interval"]) {
        if (desc.protocol != Protocol::ble_sim) r.error(n["poll_interval"], "poll_interval only applies to ble_sim devices");
        desc.poll_interval = r.duration(n["poll_interval"], where + " poll_interval");
        if (desc.poll_interval && *desc.poll_interval <= SimDuration::zero()) {
          r.error(n["poll_interval"], "poll_interval must be positive");
          desc.poll_interval.reset();
        }
      } else if (desc.protocol == Protocol::ble_sim) {
        desc.poll_interval = sim_seconds(60);
      }
      if (n["report_interval"]) {
        if (desc.protocol != Protocol::zigbee_sim) r.error(n["report_interval"], "report_interval only applies to zigbee_sim devices");
        spec.sim.report_interval = r.duration(n["report_interval"], where + " report_interval").value_or(spec.sim.report_interval);
        if (spec.sim.report_interval <= SimDuration::zero()) r.error(n["report_interval"], "report_interval must be positive");
      }
      if (n["endpoint"]) {
        if (desc.protocol == Protocol::zigbee_sim) r.error(n["endpoint"], "mesh devices have no endpoint");
        spec.endpoint = r.endpoint(n["endpoint"], where + " endpoint");
      }
      if (n["scan"]) {
        if (desc.protocol != Protocol::ble_sim) r.error(n["scan"], "scan scripts only apply to ble_sim devices");
        if (r.expect_seq(n["scan"], where + " scan")) {
          for (const auto& e : n["scan"]) {
            if (!r.expect_map(e, "scan entry", {"from", "macs"})) continue;
            protosim::ScanEntry entry;
            if (auto f = r.need(e, "from", "scan entry")) entry.from = r.instant(*f, "scan.from").value_or(sc.start);
            if (e["macs"] && r.expect_seq(e["macs"], "scan.macs"))
              for (const auto& m : e["macs"])
                if (auto mac = r.mac(m, "scan MAC")) entry.macs.push_back(*mac);
            spec.sim.scan_script.push_back(std::move(entry));
          }
          std::stable_sort(spec.sim.scan_script.begin(), spec.sim.scan_script.end(),
                           [](const auto& a, const auto& b) { return a.from < b.from; });
        }
      }
      if (n["events"]) {
        if (desc.protocol != Protocol::zwave_sim) r.error(n["events"], "event scripts only apply to zwave_sim devices");
        if (r.expect_seq(n["events"], where + " events")) {
          for (const auto& e : n["events"]) {
            if (!r.expect_map(e, "event", {"at", "metric", "state"})) continue;
            auto at = r.need(e, "at", "event");
            auto mt = r.need(e, "metric", "event");
            auto st = r.need(e, "state", "event");
            if (!at || !mt || !st) continue;
            protosim::ScriptEvent ev;
            auto t = r.instant(*at, "event.at");
            auto metric = r.metric(*mt, "event");
            auto state = r.str(*st, "event.state");
            if (!t || !metric || !state) continue;
            if (*metric != Metric::door && *metric != Metric::motion) {
              r.error(*mt, "events are door or motion");
              continue;
            }
            if (!contains(desc.metrics, *metric))
              r.error(*mt, fmt::format("{} does not report {}", where, metric_name(*metric)));
            if (*state == "open" || *state == "on" || *state == "true") ev.on = true;
            else if (*state == "closed" || *state == "off" || *state == "false") ev.on = false;
            else r.error(*st, "event.state must be open/closed or on/off");
            ev.at = *t;
            ev.metric = *metric;
            spec.sim.events.push_back(ev);
          }
          std::stable_sort(spec.sim.events.begin(), spec.sim.events.end(),
                           [](const auto& a, const auto& b) { return a.at < b.at; });
        }
      }
      for (const auto& problem : validate_descriptor(desc)) r.error(n, fmt::format("{}: {}", where, problem));
      sc.devices.push_back(std::move(spec));
    }
  }

  // mesh reachability of every sensor node
  if (sc.mesh && mesh_node) {
    std::set<meshnet::NodeId> reach{sc.mesh->sink};
    std::queue<meshnet::NodeId> q;
    if (sc.mesh->topology.has_node(sc.mesh->sink)) q.push(sc.mesh->sink);
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (auto v : sc.mesh->topology.neighbors(u))
        if (reach.insert(v).second) q.push(v);
    }
    for (const auto& [node, id] : mesh_nodes)
      if (sc.mesh->topology.has_node(static_cast<meshnet::NodeId>(node)) && !reach.count(static_cast<meshnet::NodeId>(node)))
        r.error(*mesh_node, fmt::format("mesh node {} of device '{}' cannot reach the sink", node, id));
  }

  // cameras
  if (const auto cs = root["cameras"]; cs && r.expect_seq(cs, "cameras")) {
    for (const auto& n : cs) {
      if (!r.expect_map(n, "camera", {"id", "room", "counts"})) continue;
      CameraSpec cam;
      auto idn = r.need(n, "id", "camera");
      auto rn = r.need(n, "room", "camera");
      if (!idn || !rn) continue;
      cam.id = r.str(*idn, "camera.id").value_or("");
      if (!cam.id.empty() && !ids.insert(cam.id).second) r.error(*idn, fmt::format("duplicate device id '{}'", cam.id));
      cam.room_id = r.str(*rn, "camera.room").value_or("");
      check_room(*rn, cam.room_id, "camera '" + cam.id + "'");
      if (n["counts"] && r.expect_seq(n["counts"], "camera.counts")) {
        for (const auto& c : n["counts"]) {
          if (!r.expect_map(c, "camera count", {"at", "count"})) continue;
          auto at = r.need(c, "at", "camera count");
          auto cn = r.need(c, "count", "camera count");
          if (!at || !cn) continue;
          auto t = r.instant(*at, "count.at");
          auto v = r.integer(*cn, "camera count", 0, 10000);
          if (t && v) cam.counts.emplace_back(*t, static_cast<int>(*v));
        }
        std::stable_sort(cam.counts.begin(), cam.counts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      }
      sc.cameras.push_back(std::move(cam));
    }
  }

  // tracked MACs belong to declared rooms by construction; rules reference rooms and relays
  const auto relays = sc.relay_ids();
  std::set<std::string> rule_ids;
  if (const auto rs = root["rules"]; rs && r.expect_seq(rs, "rules")) {
    for (const auto& n : rs) {
      if (!r.expect_map(n, "rule", {"id", "room", "when", "hold", "relay", "action", "revert"})) continue;
      automation::Rule rule;
      auto idn = r.need(n, "id", "rule");
      auto rn = r.need(n, "room", "rule");
      auto wn = r.need(n, "when", "rule");
      auto reln = r.need(n, "relay", "rule");
      auto an = r.need(n, "action", "rule");
      if (!idn || !rn || !wn || !reln || !an) continue;
      rule.id = r.str(*idn, "rule.id").value_or("");
      const std::string where = "rule '" + rule.id + "'";
      if (!rule_ids.insert(rule.id).second) r.error(*idn, fmt::format("duplicate rule id '{}'", rule.id));
      rule.room_id = r.str(*rn, "rule.room").value_or("");
      check_room(*rn, rule.room_id, where);
      rule.relay_id = r.str(*reln, "rule.relay").value_or("");
      if (!relays.count(rule.relay_id))
        r.error(*reln, fmt::format("unknown relay '{}' referenced by {}", rule.relay_id, where));
      if (auto a = r.str(*an, "rule.action")) {
        if (*a == "on") rule.target_on = true;
        else if (*a == "off") rule.target_on = false;
        else r.error(*an, "rule.action must be on or off");
      }
      if (n["hold"]) rule.hold = r.duration(n["hold"], where + " hold").value_or(SimDuration{});
      if (n["revert"]) rule.revert_on_release = r.boolean(n["revert"], where + " revert").value_or(false);
      if (r.expect_seq(*wn, where + " when")) {
        for (const auto& c : *wn)
          if (auto cond = parse_condition(r, c, where + " condition")) rule.conditions.push_back(*cond);
        if (wn->size() == 0) r.error(*wn, fmt::format("{} has no conditions", where));
      }
      sc.rules.push_back(std::move(rule));
    }
  }

  if (!r.diags.empty()) throw ScenarioError(source, std::move(r.diags));
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path.string(), {{0, 0, "cannot open scenario file"}});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.string());
}

}  // namespace roomsense::scenario
