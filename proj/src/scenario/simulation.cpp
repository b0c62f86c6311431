#include "roomsense/scenario/simulation.hpp"

#include <algorithm>
#include <thread>

#include <spdlog/spdlog.h>

#include "roomsense/analytics/weather.hpp"
#include "roomsense/automation/engine.hpp"
#include "roomsense/gateway/api.hpp"
#include "roomsense/meshnet/field.hpp"
#include "roomsense/tstore/store.hpp"

namespace roomsense::scenario {

using namespace std::chrono_literals;

gateway::GatewayConfig gateway_config(const Scenario& sc) {
  gateway::GatewayConfig cfg;
  cfg.rooms.insert(sc.rooms.begin(), sc.rooms.end());
  cfg.tracked_macs = sc.tracked_macs;
  cfg.bands = sc.bands;
  cfg.light_threshold = sc.light_threshold;
  cfg.alpha = sc.alpha;
  if (sc.weather_url && *sc.weather_url != "stub") cfg.weather_url = sc.weather_url;
  cfg.weather_interval = sc.weather_interval;
  if (sc.mesh) cfg.mesh_sink = sc.mesh->sink;
  return cfg;
}

DeviceFarm::DeviceFarm(const Scenario& sc, SimClock& clock) {
  for (const auto& d : sc.devices) {
    const auto ep = d.endpoint.value_or(net::Endpoint{"127.0.0.1", 0});
    switch (d.sim.descriptor.protocol) {
      case Protocol::ble_sim:
        ble_.push_back(std::make_unique<protosim::BleDevice>(d.sim, ep, clock));
        break;
      case Protocol::zwave_sim:
        zwave_.push_back(std::make_unique<protosim::ZwaveDevice>(d.sim, ep, clock));
        break;
      case Protocol::zigbee_sim:
        break;
    }
  }
}

DeviceFarm::~DeviceFarm() { stop(); }

std::optional<net::Endpoint> DeviceFarm::endpoint(const std::string& device_id) const {
  for (const auto& d : ble_)
    if (d->config().descriptor.device_id == device_id) return d->endpoint();
  for (const auto& d : zwave_)
    if (d->config().descriptor.device_id == device_id) return d->endpoint();
  return std::nullopt;
}

bool DeviceFarm::wait_clients(std::chrono::milliseconds timeout) const {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (std::all_of(zwave_.begin(), zwave_.end(), [](const auto& d) { return d->has_client(); })) return true;
    if (std::chrono::steady_clock::now() >= deadline) return false;
    std::this_thread::sleep_for(2ms);
  }
}

void DeviceFarm::start_scripts() {
  for (auto& d : zwave_) d->start_script();
}

void DeviceFarm::stop() {
  for (auto& d : zwave_) d->stop();
  for (auto& d : ble_) d->stop();
}

namespace {

/// Waits until every timed activity is parked and every Z-Wave exchange in flight
/// has been handled on both ends.
void settle(SimClock& clock, const DeviceFarm& farm, const gateway::Gateway& gw) {
  if (!clock.wait_quiescent(5s)) spdlog::warn("simulation: activities did not park within 5 s");
  const auto deadline = std::chrono::steady_clock::now() + 5s;
  for (const auto& d : farm.zwave()) {
    const auto& id = d->config().descriptor.device_id;
    while (d->frames_received() != gw.zwave_frames_written(id) || gw.zwave_frames_received(id) != d->frames_sent()) {
      if (std::chrono::steady_clock::now() >= deadline) {
        spdlog::warn("simulation: {} did not settle", id);
        break;
      }
      std::this_thread::sleep_for(200us);
    }
  }
}

struct CameraCursor {
  const CameraSpec* spec;
  std::size_t next = 0;
};

}  // namespace

SimulationResult run_simulation(const Scenario& sc, const SimulationOptions& opts) {
  const auto wall_start = std::chrono::steady_clock::now();
  SimulationResult result;
  result.start = sc.start;

  SimClock clock(sc.start, sc.compression, SimClock::Mode::stepped, opts.paced.value_or(sc.paced));
  tstore::Store store(opts.store.value_or(sc.store), tstore::StoreOptions{opts.durable, true});
  automation::Engine engine(sc.rules, sc.relay_ids());

  std::unique_ptr<analytics::StubWeatherServer> stub;
  auto cfg = gateway_config(sc);
  if (sc.weather_url && *sc.weather_url == "stub") {
    stub = std::make_unique<analytics::StubWeatherServer>(sc.stub_temp_c);
    cfg.weather_url = stub->url();
  }
  gateway::Gateway gw(std::move(cfg), clock, store, engine);

  DeviceFarm farm(sc, clock);
  for (const auto& d : sc.devices) {
    if (auto err = gw.register_device(d.sim.descriptor, farm.endpoint(d.sim.descriptor.device_id)))
      throw std::runtime_error(fmt::format("cannot register {}: {}", d.sim.descriptor.device_id,
                                           gateway::registry_error_name(*err)));
  }
  std::vector<CameraCursor> cameras;
  for (const auto& c : sc.cameras) {
    gw.register_camera(c.id, c.room_id);
    cameras.push_back({&c});
  }

  std::unique_ptr<meshnet::MeshNetwork> mesh;
  std::unique_ptr<meshnet::SensorField> field;
  if (sc.mesh) {
    std::vector<meshnet::SensorSource> sources;
    for (const auto& d : sc.devices) {
      if (d.sim.descriptor.protocol != Protocol::zigbee_sim) continue;
      sources.push_back({std::get<MeshNodeId>(d.sim.descriptor.address).value, d.sim.signals, d.sim.report_interval});
    }
    mesh = std::make_unique<meshnet::MeshNetwork>(sc.mesh->topology, sc.mesh->config, sc.start);
    field = std::make_unique<meshnet::SensorField>(*mesh, sc.mesh->sink, std::move(sources), sc.start);
    field->on_sink([&gw](meshnet::NodeId src, const meshnet::SensorPayload& p, SimInstant) {
      if (auto err = gw.intake_mesh(src, p)) spdlog::warn("mesh intake from {}: {}", src, gateway::intake_error_name(*err));
    });
  }

  std::unique_ptr<gateway::ApiServer> api;
  if (opts.api) {
    api = std::make_unique<gateway::ApiServer>(gw, *opts.api);
    spdlog::info("api listening on {}", api->endpoint().to_string());
    if (opts.on_api_ready) opts.on_api_ready(api->endpoint());
  }

  gw.connect_push_devices();
  if (!farm.wait_clients(5s)) throw std::runtime_error("zwave devices did not see the gateway connect");
  farm.start_scripts();
  spdlog::info("simulating {} from {} for {} s at {}x", sc.name.empty() ? "scenario" : sc.name,
               format_iso8601(sc.start), std::chrono::duration_cast<std::chrono::seconds>(sc.duration).count(),
               sc.compression);

  const SimInstant end = sc.end();
  SimInstant reached = sc.start;
  for (;;) {
    if (opts.interrupt && opts.interrupt->load()) {
      result.interrupted = true;
      break;
    }
    std::optional<SimInstant> next = gw.next_due();
    const auto consider = [&](std::optional<SimInstant> t) {
      if (t && (!next || *t < *next)) next = t;
    };
    consider(clock.next_wakeup());
    if (field) consider(field->next_event());
    for (const auto& c : cameras)
      if (c.next < c.spec->counts.size()) consider(c.spec->counts[c.next].first);
    if (!next || *next >= end) break;
    const SimInstant t = std::max(*next, reached);

    clock.advance_to(t);
    settle(clock, farm, gw);
    if (field) field->advance_to(t);
    for (auto& c : cameras) {
      while (c.next < c.spec->counts.size() && c.spec->counts[c.next].first <= t) {
        const auto& [at, count] = c.spec->counts[c.next++];
        if (auto err = gw.intake_camera(c.spec->id, count, at))
          spdlog::warn("camera {}: {}", c.spec->id, gateway::intake_error_name(*err));
      }
    }
    gw.step(t);
    settle(clock, farm, gw);
    reached = t;
    ++result.steps;
  }

  if (api) api->stop();
  farm.stop();

  result.reached = reached;
  result.stats = gw.stats();
  if (field) {
    result.mesh_reports = field->reports();
    result.mesh_delivered = field->delivered();
    result.mesh_failed = field->failed();
  }
  for (const auto& d : farm.zwave()) result.zwave_dropped += d->frames_dropped();
  result.wall = std::chrono::steady_clock::now() - wall_start;
  spdlog::info("simulation {} at {} after {} steps: {} stored, {} rejected, {} poll faults ({:.1f} s wall)",
               result.interrupted ? "interrupted" : "finished", format_iso8601(reached), result.steps,
               result.stats.stored, result.stats.store_rejected, result.stats.poll_faults, result.wall.count());
  return result;
}

}  // namespace roomsense::scenario
