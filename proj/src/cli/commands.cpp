#include "roomsense/cli/commands.hpp"

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <spdlog/spdlog.h>

#include "roomsense/analytics/comfort.hpp"
#include "roomsense/analytics/occupancy.hpp"
#include "roomsense/analytics/profile.hpp"
#include "roomsense/analytics/weather.hpp"
#include "roomsense/gateway/api.hpp"
#include "roomsense/gateway/json.hpp"
#include "roomsense/meshnet/field.hpp"
#include "roomsense/scenario/simulation.hpp"
#include "roomsense/tstore/csv.hpp"
#include "roomsense/tstore/store.hpp"

namespace roomsense::cli {

namespace fs = std::filesystem;
using namespace std::chrono_literals;

std::atomic<bool>& interrupt_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

namespace {

extern "C" void on_signal(int) { interrupt_flag().store(true); }

class SignalGuard {
 public:
  SignalGuard() {
    interrupt_flag().store(false);
    prev_int_ = std::signal(SIGINT, on_signal);
    prev_term_ = std::signal(SIGTERM, on_signal);
  }
  ~SignalGuard() {
    std::signal(SIGINT, prev_int_);
    std::signal(SIGTERM, prev_term_);
  }

 private:
  void (*prev_int_)(int);
  void (*prev_term_)(int);
};

/// Usage-level failure; reported and mapped to kInvalid.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Args {
  std::string scenario;
  std::string store;
  std::string room;
  std::string device;
  std::string metric;
  std::string from;
  std::string to;
  std::string bind;
  std::string duration;
  int bucket = 60;
  bool json = false;
  bool no_api = false;
  bool unpaced = false;
};

SimInstant parse_time(const std::string& text, const char* flag) {
  auto t = parse_iso8601(text);
  if (!t) throw UsageError(fmt::format("{} must be ISO-8601 like 2017-03-01T00:00:00Z", flag));
  return *t;
}

std::optional<Metric> metric_arg(const Args& a) {
  if (a.metric.empty()) return std::nullopt;
  auto m = parse_metric(a.metric);
  if (!m) throw UsageError(fmt::format("unknown metric '{}'", a.metric));
  return m;
}

scenario::Scenario load(const std::string& path) {
  if (path.empty()) throw UsageError("--scenario is required");
  return scenario::load_scenario(path);
}

/// Opens an existing store for reading; a missing root has no data.
std::unique_ptr<tstore::Store> open_store(const Args& a, const std::optional<scenario::Scenario>& sc) {
  fs::path root = a.store.empty() ? (sc ? sc->store : fs::path{}) : fs::path{a.store};
  if (root.empty()) throw UsageError("--store (or --scenario) is required");
  if (!fs::is_directory(root)) throw NoData(fmt::format("no store at {}", root.string()));
  return std::make_unique<tstore::Store>(root, tstore::StoreOptions{false, false});
}

const SimInstant kFarFuture = from_epoch_seconds(4102444800);  // 2100-01-01

tstore::QueryRange range_for(const Args& a) {
  tstore::QueryRange q;
  if (!a.room.empty()) q.room_id = a.room;
  if (!a.device.empty()) q.device_id = a.device;
  q.metric = metric_arg(a);
  q.from = a.from.empty() ? from_epoch_seconds(0) : parse_time(a.from, "--from");
  q.to = a.to.empty() ? kFarFuture : parse_time(a.to, "--to");
  if (q.to <= q.from) throw UsageError("--to must be after --from");
  return q;
}

std::optional<scenario::Scenario> maybe_load(const Args& a) {
  if (a.scenario.empty()) return std::nullopt;
  return load(a.scenario);
}

std::vector<analytics::OccupancyEvent> occupancy_events(const std::vector<Reading>& readings) {
  std::vector<analytics::OccupancyEvent> events;
  std::map<std::string, bool> present;  // per device, for arrival edges
  for (const auto& r : readings) {
    analytics::OccupancyEvent e{r.room_id, analytics::OccupancyKind::motion, r.value, r.timestamp};
    switch (r.metric) {
      case Metric::camera_count: e.kind = analytics::OccupancyKind::camera_count; break;
      case Metric::door: e.kind = r.value > 0.5 ? analytics::OccupancyKind::door_open : analytics::OccupancyKind::door_closed; break;
      case Metric::motion: e.kind = analytics::OccupancyKind::motion; break;
      case Metric::presence: {
        const bool was = std::exchange(present[r.device_id], r.value > 0.5);
        if (was || r.value < 0.5) continue;
        e.kind = analytics::OccupancyKind::presence_seen;
        break;
      }
      default: continue;
    }
    events.push_back(e);
  }
  std::stable_sort(events.begin(), events.end(), [](const auto& x, const auto& y) { return x.ts < y.ts; });
  return events;
}

std::string format_hm(SimDuration d) {
  const auto mins = std::chrono::duration_cast<std::chrono::minutes>(d).count();
  return fmt::format("{}h{:02}m", mins / 60, mins % 60);
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Args& a, std::ostream& out) {
  auto sc = load(a.scenario);
  if (!a.duration.empty()) {
    auto d = scenario::parse_duration(a.duration);
    if (!d || *d <= SimDuration::zero()) throw UsageError("--duration must be a positive duration");
    sc.duration = *d;
  }
  scenario::SimulationOptions opts;
  if (!a.store.empty()) opts.store = a.store;
  if (a.unpaced) opts.paced = false;
  if (!a.no_api) {
    opts.api = sc.bind;
    if (!a.bind.empty()) {
      auto ep = net::Endpoint::parse(a.bind);
      if (!ep) throw UsageError("--bind must look like host:port");
      opts.api = *ep;
    }
  }
  opts.interrupt = &interrupt_flag();
  SignalGuard guard;
  const auto res = scenario::run_simulation(sc, opts);
  fmt::print(out, "{} {} -> {}: {} steps, {} readings stored, {} rejected, {} poll faults, {:.1f} s wall\n",
             res.interrupted ? "interrupted" : "completed", format_iso8601(res.start), format_iso8601(res.reached),
             res.steps, res.stats.stored, res.stats.store_rejected, res.stats.poll_faults, res.wall.count());
  if (res.mesh_reports > 0)
    fmt::print(out, "mesh: {} reports, {} delivered, {} failed\n", res.mesh_reports, res.mesh_delivered, res.mesh_failed);
  return kOk;
}

int cmd_gateway(const Args& a, std::ostream& out) {
  const auto sc = load(a.scenario);
  std::vector<scenario::Diagnostic> missing;
  for (const auto& d : sc.devices)
    if (d.sim.descriptor.protocol != Protocol::zigbee_sim && !d.endpoint)
      missing.push_back({0, 0, fmt::format("device '{}' needs an endpoint to be reached by the gateway", d.sim.descriptor.device_id)});
  if (!missing.empty()) throw scenario::ScenarioError(a.scenario, std::move(missing));

  net::Endpoint bind = sc.bind;
  if (!a.bind.empty()) {
    auto ep = net::Endpoint::parse(a.bind);
    if (!ep) throw UsageError("--bind must look like host:port");
    bind = *ep;
  }

  SignalGuard guard;
  SimClock clock(sc.start, sc.compression, SimClock::Mode::free_running);
  tstore::Store store(a.store.empty() ? sc.store : fs::path{a.store});
  automation::Engine engine(sc.rules, sc.relay_ids());
  std::unique_ptr<analytics::StubWeatherServer> stub;
  auto cfg = scenario::gateway_config(sc);
  if (sc.weather_url && *sc.weather_url == "stub") {
    stub = std::make_unique<analytics::StubWeatherServer>(sc.stub_temp_c);
    cfg.weather_url = stub->url();
  }
  gateway::Gateway gw(std::move(cfg), clock, store, engine);
  for (const auto& d : sc.devices)
    if (auto err = gw.register_device(d.sim.descriptor, d.endpoint))
      throw std::runtime_error(fmt::format("cannot register {}: {}", d.sim.descriptor.device_id,
                                           gateway::registry_error_name(*err)));
  for (const auto& c : sc.cameras) gw.register_camera(c.id, c.room_id);

  std::vector<std::jthread> sources;
  for (const auto& c : sc.cameras) {
    sources.emplace_back([&gw, &clock, &c](std::stop_token st) {
      for (const auto& [at, count] : c.counts) {
        if (at < clock.now()) continue;
        if (!clock.wait_until(at, st)) return;
        gw.intake_camera(c.id, count, at);
        gw.notify();
      }
    });
  }
  std::unique_ptr<meshnet::MeshNetwork> mesh;
  std::unique_ptr<meshnet::SensorField> field;
  if (sc.mesh) {
    std::vector<meshnet::SensorSource> nodes;
    for (const auto& d : sc.devices)
      if (d.sim.descriptor.protocol == Protocol::zigbee_sim)
        nodes.push_back({std::get<MeshNodeId>(d.sim.descriptor.address).value, d.sim.signals, d.sim.report_interval});
    mesh = std::make_unique<meshnet::MeshNetwork>(sc.mesh->topology, sc.mesh->config, clock.now());
    field = std::make_unique<meshnet::SensorField>(*mesh, sc.mesh->sink, std::move(nodes), clock.now());
    field->on_sink([&gw](meshnet::NodeId src, const meshnet::SensorPayload& p, SimInstant) { gw.intake_mesh(src, p); });
    sources.emplace_back([&field = *field, &clock](std::stop_token st) {
      while (!st.stop_requested()) {
        field.advance_to(clock.now());
        std::this_thread::sleep_for(20ms);
      }
    });
  }

  gateway::ApiServer api(gw, bind);
  gw.start();
  fmt::print(out, "gateway serving {} devices; api on {}\n", sc.devices.size(), api.endpoint().to_string());
  out.flush();
  while (!interrupt_flag().load()) std::this_thread::sleep_for(50ms);

  sources.clear();
  api.stop();
  gw.stop();
  return kOk;
}

int cmd_devices(const Args& a, std::ostream& out) {
  const auto sc = load(a.scenario);
  SignalGuard guard;
  SimClock clock(sc.start, sc.compression, SimClock::Mode::free_running);
  scenario::DeviceFarm farm(sc, clock);
  for (const auto& d : sc.devices)
    if (auto ep = farm.endpoint(d.sim.descriptor.device_id))
      fmt::print(out, "{} {} {}\n", d.sim.descriptor.device_id, protocol_name(d.sim.descriptor.protocol), ep->to_string());
  out.flush();
  farm.start_scripts();
  while (!interrupt_flag().load()) std::this_thread::sleep_for(50ms);
  farm.stop();
  return kOk;
}

int cmd_query(const Args& a, std::ostream& out) {
  const auto sc = maybe_load(a);
  auto store = open_store(a, sc);
  const auto rows = store->query(range_for(a));
  if (rows.empty()) throw NoData("no readings match the query");
  out << "timestamp,device_id,room_id,metric,value,unit\n";
  for (const auto& r : rows)
    fmt::print(out, "{},{},{},{},{},{}\n", format_iso8601(r.timestamp), r.device_id, r.room_id, metric_name(r.metric),
               tstore::format_value(r.value), canonical_unit(r.metric));
  return kOk;
}

int cmd_report(const Args& a, std::ostream& out) {
  if (a.room.empty()) throw UsageError("--room is required");
  const auto sc = maybe_load(a);
  auto store = open_store(a, sc);
  auto q = range_for(a);
  q.metric.reset();
  q.device_id.reset();
  const auto rows = store->query(q);
  if (rows.empty()) throw NoData(fmt::format("no readings for room '{}'", a.room));

  const auto bands = sc ? sc->bands : analytics::default_bands();
  const double threshold = sc ? sc->light_threshold : analytics::kDefaultLightThreshold;
  const auto report = analytics::comfort_report(a.room, rows, bands, threshold);
  const SimInstant t0 = a.from.empty() ? rows.front().timestamp : q.from;
  const auto ledger = analytics::occupancy_ledger(t0, occupancy_events(rows));
  const int count = ledger.steps.empty() ? 0 : ledger.steps.back().count;

  if (a.json) {
    gateway::Json j;
    j["comfort"] = gateway::comfort_json(report, bands, threshold);
    j["occupancy"] = gateway::occupancy_json(a.room, ledger, count);
    out << j.dump(2) << '\n';
    return kOk;
  }

  SimInstant first = rows.front().timestamp, last = rows.front().timestamp;
  for (const auto& r : rows) {
    first = std::min(first, r.timestamp);
    last = std::max(last, r.timestamp);
  }
  fmt::print(out, "room {}  {} .. {}  ({} readings)\n", a.room, format_iso8601(first), format_iso8601(last), rows.size());
  for (const auto& m : report.metrics) {
    if (m.flag == analytics::ComfortFlag::no_data) {
      fmt::print(out, "  {:<12} no data\n", metric_name(m.metric));
      continue;
    }
    const auto& b = bands.at(m.metric);
    fmt::print(out, "  {:<12} mean {:.2f} {}  score {:.3f}  {}  (band {}..{}, {} samples)\n", metric_name(m.metric),
               m.mean_value, canonical_unit(m.metric), m.mean_score, comfort_flag_name(m.flag), b.lo, b.hi, m.samples);
  }
  if (report.overall) fmt::print(out, "  overall      {:.3f}\n", *report.overall);
  if (report.light)
    fmt::print(out, "  light        {} (mean {:.1f} lux, threshold {})\n", light_class_name(*report.light),
               *report.mean_lux, threshold);
  else
    fmt::print(out, "  light        no data\n");

  int peak = 0;
  SimDuration occupied{};
  for (std::size_t i = 0; i < ledger.steps.size(); ++i) {
    peak = std::max(peak, ledger.steps[i].count);
    const SimInstant end = i + 1 < ledger.steps.size() ? ledger.steps[i + 1].ts : std::max(last, ledger.steps[i].ts);
    if (ledger.steps[i].count > 0) occupied += end - ledger.steps[i].ts;
  }
  fmt::print(out, "  occupancy    now {}, peak {}, occupied {}, {} changes, {} annotations\n", count, peak,
             format_hm(occupied), ledger.steps.empty() ? 0 : ledger.steps.size() - 1, ledger.annotations.size());
  return kOk;
}

int cmd_export(const Args& a, std::ostream& out) {
  if (a.metric.empty()) throw UsageError("--metric is required");
  if (a.room.empty() && a.device.empty()) throw UsageError("--room or --device is required");
  if (a.bucket <= 0) throw UsageError("--bucket must be a positive number of minutes");
  const auto sc = maybe_load(a);
  auto store = open_store(a, sc);
  const auto series = store->export_plot_series(range_for(a), sim_minutes(a.bucket));
  if (series.empty()) throw NoData("no readings in range");
  out << "bucket_start,mean\n";
  for (const auto& p : series) fmt::print(out, "{},{:.2f}\n", format_iso8601(p.bucket_start), p.mean);
  return kOk;
}

int cmd_replay(const Args& a, std::ostream& out) {
  const auto sc = maybe_load(a);
  auto store = open_store(a, sc);
  auto q = range_for(a);
  auto rows = store->query(q);
  if (rows.empty()) throw NoData("no readings to replay");
  std::stable_sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.timestamp < y.timestamp; });

  analytics::HourlyProfile profile(sc ? sc->alpha : analytics::kDefaultAlpha);
  for (const auto& r : rows)
    if (!is_binary(r.metric) && r.metric != Metric::camera_count) profile.update(r);

  if (a.json) {
    const auto bands = sc ? sc->bands : analytics::default_bands();
    const double threshold = sc ? sc->light_threshold : analytics::kDefaultLightThreshold;
    std::map<std::string, std::vector<Reading>> by_room;
    for (const auto& r : rows) by_room[r.room_id].push_back(r);
    gateway::Json j = gateway::Json::object();
    for (const auto& [room, readings] : by_room) {
      const auto ledger = analytics::occupancy_ledger(readings.front().timestamp, occupancy_events(readings));
      auto& jr = j[room];
      jr["comfort"] = gateway::comfort_json(analytics::comfort_report(room, readings, bands, threshold), bands, threshold);
      jr["occupancy"] = gateway::occupancy_json(room, ledger, ledger.steps.empty() ? 0 : ledger.steps.back().count);
      jr["profile"] = gateway::Json::array();
    }
    for (const auto& [key, slot] : profile.snapshot()) {
      const auto& [room, metric, hour] = key;
      j[room]["profile"].push_back({{"metric", metric_name(metric)}, {"hour", hour}, {"prediction", slot.s}, {"samples", slot.count}});
    }
    out << j.dump(2) << '\n';
    return kOk;
  }
  out << "room_id,metric,hour,prediction,samples\n";
  for (const auto& [key, slot] : profile.snapshot()) {
    const auto& [room, metric, hour] = key;
    fmt::print(out, "{},{},{},{:.2f},{}\n", room, metric_name(metric), hour, slot.s, slot.count);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Smart-room sensing: simulated devices, gateway, store and reports", "roomsense"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

  Args a;
  const auto scenario_opt = [&](CLI::App* c, bool required) {
    auto* o = c->add_option("--scenario", a.scenario, "Scenario file");
    if (required) o->required();
  };
  const auto window_opts = [&](CLI::App* c) {
    c->add_option("--from", a.from, "Window start, ISO-8601 (inclusive)");
    c->add_option("--to", a.to, "Window end, ISO-8601 (exclusive)");
  };

  auto* sim = app.add_subcommand("simulate", "Run a scenario on the simulated clock until its end");
  scenario_opt(sim, true);
  sim->add_option("--store", a.store, "Store root (overrides the scenario)");
  sim->add_option("--bind", a.bind, "API address (overrides the scenario)");
  sim->add_option("--duration", a.duration, "Simulated duration (overrides the scenario), e.g. 2h");
  sim->add_flag("--no-api", a.no_api, "Do not serve the HTTP API");
  sim->add_flag("--unpaced", a.unpaced, "Run as fast as possible instead of tracking the compression");

  auto* gw = app.add_subcommand("gateway", "Serve the gateway against devices at their scenario endpoints");
  scenario_opt(gw, true);
  gw->add_option("--store", a.store, "Store root (overrides the scenario)");
  gw->add_option("--bind", a.bind, "API address (overrides the scenario)");

  auto* dev = app.add_subcommand("devices", "Serve the scenario's simulated BLE and Z-Wave devices");
  scenario_opt(dev, true);

  auto* query = app.add_subcommand("query", "Print stored readings as CSV");
  scenario_opt(query, false);
  query->add_option("--store", a.store, "Store root");
  query->add_option("--room", a.room, "Room id");
  query->add_option("--device", a.device, "Device id");
  query->add_option("--metric", a.metric, "Metric name");
  window_opts(query);

  auto* report = app.add_subcommand("report", "Comfort, light and occupancy report for one room");
  scenario_opt(report, false);
  report->add_option("--store", a.store, "Store root");
  report->add_option("--room", a.room, "Room id")->required();
  window_opts(report);
  report->add_flag("--json", a.json, "Emit JSON");

  auto* exp = app.add_subcommand("export", "Bucketed means as plot-ready CSV");
  scenario_opt(exp, false);
  exp->add_option("--store", a.store, "Store root");
  exp->add_option("--room", a.room, "Room id");
  exp->add_option("--device", a.device, "Device id");
  exp->add_option("--metric", a.metric, "Metric name")->required();
  exp->add_option("--bucket", a.bucket, "Bucket width in minutes")->capture_default_str();
  window_opts(exp);

  auto* replay = app.add_subcommand("replay", "Re-run a store through the analytics and print the hourly profile");
  scenario_opt(replay, false);
  replay->add_option("--store", a.store, "Store root");
  replay->add_option("--room", a.room, "Room id");
  window_opts(replay);
  replay->add_flag("--json", a.json, "Emit comfort, occupancy and profile per room as JSON");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalid;
  }

  const auto level = spdlog::level::from_str(log_level);
  spdlog::set_level(level);

  try {
    if (sim->parsed()) return cmd_simulate(a, out);
    if (gw->parsed()) return cmd_gateway(a, out);
    if (dev->parsed()) return cmd_devices(a, out);
    if (query->parsed()) return cmd_query(a, out);
    if (report->parsed()) return cmd_report(a, out);
    if (exp->parsed()) return cmd_export(a, out);
    if (replay->parsed()) return cmd_replay(a, out);
  } catch (const scenario::ScenarioError& e) {
    for (const auto& d : e.diagnostics()) err << scenario::format_diagnostic(e.source(), d) << '\n';
    return kInvalid;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const NoData& e) {
    err << "NO_DATA: " << e.what() << '\n';
    return kNoData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kInvalid;
}

}  // namespace roomsense::cli
