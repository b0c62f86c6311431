#include "roomsense/gateway/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <spdlog/spdlog.h>

#include "roomsense/gateway/json.hpp"

namespace roomsense::gateway {

using namespace std::chrono_literals;
using protosim::Bytes;

std::string_view intake_error_name(IntakeError e) {
  switch (e) {
    case IntakeError::unknown_node: return "UNKNOWN_NODE";
    case IntakeError::unknown_device: return "UNKNOWN_DEVICE";
    case IntakeError::invalid: return "INVALID";
  }
  return "";
}

std::optional<OperatorMode> parse_operator_mode(std::string_view s) {
  if (s == "manual") return OperatorMode::manual;
  if (s == "auto") return OperatorMode::automatic;
  if (s == "clear") return OperatorMode::clear;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// StreamHub

std::optional<std::string> StreamHub::Subscription::next(std::chrono::milliseconds wait) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, wait, [&] { return !lines_.empty() || closed_; });
  if (lines_.empty()) return std::nullopt;
  std::string line = std::move(lines_.front());
  lines_.pop_front();
  return line;
}

bool StreamHub::Subscription::closed() const {
  std::lock_guard lock(mu_);
  return closed_ && lines_.empty();
}

std::uint64_t StreamHub::Subscription::dropped() const {
  std::lock_guard lock(mu_);
  return dropped_;
}

std::shared_ptr<StreamHub::Subscription> StreamHub::subscribe() {
  auto sub = std::make_shared<Subscription>();
  std::lock_guard lock(mu_);
  sub->closed_ = closed_;
  subs_.push_back(sub);
  return sub;
}

void StreamHub::publish(const std::string& line) {
  std::lock_guard lock(mu_);
  std::erase_if(subs_, [](const auto& w) { return w.expired(); });
  for (const auto& w : subs_) {
    auto sub = w.lock();
    if (!sub) continue;
    {
      std::lock_guard sl(sub->mu_);
      if (sub->lines_.size() >= kMaxQueued) {
        sub->lines_.pop_front();
        ++sub->dropped_;
      }
      sub->lines_.push_back(line);
    }
    sub->cv_.notify_one();
  }
}

void StreamHub::close() {
  std::lock_guard lock(mu_);
  closed_ = true;
  for (const auto& w : subs_) {
    if (auto sub = w.lock()) {
      {
        std::lock_guard sl(sub->mu_);
        sub->closed_ = true;
      }
      sub->cv_.notify_all();
    }
  }
}

std::size_t StreamHub::subscribers() const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(
      std::count_if(subs_.begin(), subs_.end(), [](const auto& w) { return !w.expired(); }));
}

// ---------------------------------------------------------------------------
// Device links

/// Synchronous request/response over one lazily opened connection.
class BleLink {
 public:
  explicit BleLink(net::Endpoint ep) : ep_(std::move(ep)) {}

  std::variant<protosim::BleFrame, PollFault> transact(const protosim::BleRequest& req,
                                                       std::chrono::milliseconds timeout) {
    std::lock_guard lock(mu_);  // one request in flight per device
    if (!conn_.is_open()) {
      try {
        conn_ = net::TcpStream::connect(ep_, timeout);
      } catch (const net::NetError& e) {
        spdlog::debug("ble {}: {}", ep_.to_string(), e.what());
        return PollFault::timeout;
      }
    }
    try {
      conn_.write_all(protosim::encode_ble(req));
    } catch (const net::NetError&) {
      conn_.close();
      return PollFault::timeout;
    }
    auto reply = read_frame(timeout);
    if (std::holds_alternative<PollFault>(reply)) {
      // After a timeout or a corrupt frame the byte stream position is unknown.
      const auto f = std::get<PollFault>(reply);
      if (f != PollFault::unknown_char) conn_.close();
    }
    return reply;
  }

  void close() {
    std::lock_guard lock(mu_);
    conn_.close();
  }

 private:
  std::variant<protosim::BleFrame, PollFault> read_frame(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    const auto left = [&] {
      return std::max(0ms, std::chrono::duration_cast<std::chrono::milliseconds>(
                               deadline - std::chrono::steady_clock::now()));
    };
    Bytes buf(1);
    if (conn_.read_exact(buf, left()) != net::IoStatus::ok) return PollFault::timeout;
    for (;;) {
      const int size = protosim::ble_wire_size(buf);
      if (size < 0) return PollFault::bad_frame;
      const std::size_t have = buf.size();
      const std::size_t want = size == 0 ? have + 1 : static_cast<std::size_t>(size);
      if (want == have) break;
      buf.resize(want);
      if (conn_.read_exact(std::span(buf).subspan(have), left()) != net::IoStatus::ok)
        return PollFault::timeout;
    }
    auto decoded = protosim::decode_ble(buf);
    if (auto* err = std::get_if<protosim::CodecError>(&decoded))
      return *err == protosim::CodecError::bad_crc ? PollFault::bad_crc : PollFault::bad_frame;
    return std::get<protosim::BleFrame>(decoded);
  }

  net::Endpoint ep_;
  std::mutex mu_;
  net::TcpStream conn_;
};

/// Persistent connection to a push device with a reader thread feeding intake.
class ZwaveLink {
 public:
  ZwaveLink(std::string device_id, net::Endpoint ep) : device_id_(std::move(device_id)), ep_(std::move(ep)) {}
  ~ZwaveLink() { stop(); }

  bool connected() const {
    std::lock_guard lock(mu_);
    return conn_ && conn_->is_open();
  }

  /// (Re)connects and starts the reader; false when the device is unreachable.
  template <class OnFrame>
  bool connect(std::chrono::milliseconds timeout, OnFrame on_frame) {
    stop();
    std::shared_ptr<net::TcpStream> conn;
    try {
      conn = std::make_shared<net::TcpStream>(net::TcpStream::connect(ep_, timeout));
    } catch (const net::NetError& e) {
      spdlog::warn("zwave {}: {}", device_id_, e.what());
      return false;
    }
    {
      std::lock_guard lock(mu_);
      conn_ = conn;
    }
    reader_ = std::jthread([this, conn, on_frame](std::stop_token st) { read_loop(st, *conn, on_frame); });
    return true;
  }

  bool send(const protosim::ZwaveFrame& f) {
    std::lock_guard lock(mu_);
    if (!conn_ || !conn_->is_open()) return false;
    try {
      conn_->write_all(protosim::encode_zwave(f));
    } catch (const net::NetError& e) {
      spdlog::warn("zwave {}: {}", device_id_, e.what());
      return false;
    }
    ++written_;
    return true;
  }

  void stop() {
    if (reader_.joinable()) {
      reader_.request_stop();
      reader_.join();
    }
    std::lock_guard lock(mu_);
    conn_.reset();
  }

  std::uint64_t received() const { return received_.load(); }
  std::uint64_t written() const {
    std::lock_guard lock(mu_);
    return written_;
  }

 private:
  template <class OnFrame>
  void read_loop(std::stop_token st, net::TcpStream& conn, OnFrame on_frame) {
    std::array<std::uint8_t, protosim::kZwaveFrameSize> buf{};
    while (!st.stop_requested()) {
      const auto ready = conn.wait_readable(50ms);
      if (ready == net::IoStatus::timeout) continue;
      if (ready == net::IoStatus::closed) break;
      if (conn.read_exact(std::span(buf).first(1), 1s) != net::IoStatus::ok) break;
      if (buf[0] != protosim::kZwaveSof) {
        spdlog::debug("zwave {}: dropping stray byte {:#04x}", device_id_, buf[0]);
        continue;
      }
      if (conn.read_exact(std::span(buf).subspan(1), 1s) != net::IoStatus::ok) break;
      const auto decoded = protosim::decode_zwave(buf);
      if (const auto* f = std::get_if<protosim::ZwaveFrame>(&decoded)) {
        on_frame(*f);
      } else {
        spdlog::warn("zwave {}: dropped frame ({})", device_id_,
                     protosim::codec_error_name(std::get<protosim::CodecError>(decoded)));
      }
      ++received_;
    }
    spdlog::debug("zwave {}: reader finished", device_id_);
  }

  std::string device_id_;
  net::Endpoint ep_;
  mutable std::mutex mu_;
  std::shared_ptr<net::TcpStream> conn_;
  std::uint64_t written_ = 0;
  std::atomic<std::uint64_t> received_{0};
  std::jthread reader_;
};

// ---------------------------------------------------------------------------
// Gateway

namespace {

std::set<Protocol> supported_protocols(const GatewayConfig& cfg) {
  std::set<Protocol> p{Protocol::ble_sim, Protocol::zwave_sim};
  if (cfg.mesh_sink) p.insert(Protocol::zigbee_sim);
  return p;
}

bool profiled(Metric m) { return !is_binary(m) && m != Metric::camera_count; }

}  // namespace

Gateway::Gateway(GatewayConfig cfg, SimClock& clock, tstore::Store& store, automation::Engine& engine)
    : cfg_(std::move(cfg)),
      clock_(clock),
      store_(store),
      engine_(engine),
      registry_(supported_protocols(cfg_)),
      profile_(cfg_.alpha),
      rooms_(cfg_.rooms),
      started_at_(clock.now()) {
  for (const auto& [metric, band] : cfg_.bands) analytics::validate_band(band);
  if (cfg_.weather_url) {
    weather_ = std::make_unique<analytics::WeatherClient>(*cfg_.weather_url);
    weather_due_ = clock_.now();
  }
  next_tick_ = clock_.now();
}

Gateway::~Gateway() {
  stop();
  for (auto& [id, link] : zwave_links_) link->stop();
}

std::optional<RegistryError> Gateway::register_device(const DeviceDescriptor& d,
                                                      std::optional<net::Endpoint> endpoint) {
  const SimInstant now = clock_.now();
  if (auto err = registry_.add(d, endpoint, now)) return err;
  std::lock_guard step(step_mu_);
  std::lock_guard lock(mu_);
  rooms_.insert(d.room_id);
  if (d.protocol == Protocol::ble_sim) {
    const SimDuration interval = d.poll_interval.value_or(kDefaultPollInterval);
    for (Metric m : d.metrics) {
      const auto ch = protosim::char_for_metric(m);
      if (!ch) continue;
      scheduler_.add(PollJob{d.device_id, JobKind::read, m, *ch, now, interval});
    }
    if (cfg_.tracked_macs.count(d.room_id))
      scheduler_.add(PollJob{d.device_id, JobKind::scan, Metric::presence, 0, now, interval});
    if (endpoint) ble_links_[d.device_id] = std::make_unique<BleLink>(*endpoint);
  } else if (d.protocol == Protocol::zwave_sim && endpoint) {
    zwave_links_[d.device_id] = std::make_unique<ZwaveLink>(d.device_id, *endpoint);
  }
  return std::nullopt;
}

void Gateway::register_camera(const std::string& camera_id, const std::string& room_id) {
  std::lock_guard lock(mu_);
  cameras_[camera_id] = room_id;
  rooms_.insert(room_id);
}

void Gateway::connect_push_devices() {
  for (auto& [id, link] : zwave_links_) {
    if (link->connected()) continue;
    link->connect(std::max(wall_timeout(), std::chrono::milliseconds(1000)),
                  [this](const protosim::ZwaveFrame& f) { intake_zwave(f); });
  }
}

std::chrono::milliseconds Gateway::wall_timeout() const {
  const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(clock_.to_wall(cfg_.poll_timeout));
  return std::max(wall, cfg_.min_wall_timeout);
}

std::variant<Reading, PollFault> Gateway::poll_once(const PollJob& job) {
  const auto entry = registry_.get(job.device_id);
  BleLink* link = nullptr;
  {
    std::lock_guard lock(mu_);
    auto it = ble_links_.find(job.device_id);
    if (it != ble_links_.end()) link = it->second.get();
  }
  if (!entry || !link) return PollFault::timeout;

  const auto fail = [&](PollFault f) -> std::variant<Reading, PollFault> {
    spdlog::warn("poll {} {}: {}", job.device_id, metric_name(job.metric), poll_fault_name(f));
    registry_.record_fault(job.device_id, f);
    std::lock_guard lock(mu_);
    ++stats_.poll_faults;
    return f;
  };

  auto reply = link->transact({protosim::kOpRead, job.char_id}, wall_timeout());
  if (auto* f = std::get_if<PollFault>(&reply)) return fail(*f);
  const auto* resp = std::get_if<protosim::BleResponse>(&std::get<protosim::BleFrame>(reply));
  if (!resp || resp->char_id != job.char_id) {
    link->close();
    return fail(PollFault::bad_frame);
  }
  if (resp->status != protosim::kStatusOk) return fail(PollFault::unknown_char);

  Reading r{job.device_id, entry->descriptor.room_id, job.metric, resp->value(),
            from_epoch_seconds(resp->ts)};
  registry_.mark_seen(job.device_id, clock_.now());
  {
    std::lock_guard lock(mu_);
    ++stats_.polls_ok;
  }
  ingest(r);
  return r;
}

void Gateway::run_scan(const PollJob& job, SimInstant now) {
  const auto entry = registry_.get(job.device_id);
  BleLink* link = nullptr;
  {
    std::lock_guard lock(mu_);
    auto it = ble_links_.find(job.device_id);
    if (it != ble_links_.end()) link = it->second.get();
  }
  if (!entry || !link) return;
  auto reply = link->transact({protosim::kOpScan, 0}, wall_timeout());
  const protosim::BleScanResponse* scan = nullptr;
  if (auto* frame = std::get_if<protosim::BleFrame>(&reply)) scan = std::get_if<protosim::BleScanResponse>(frame);
  if (!scan) {
    const auto f = std::holds_alternative<PollFault>(reply) ? std::get<PollFault>(reply) : PollFault::bad_frame;
    if (!std::holds_alternative<PollFault>(reply)) link->close();
    spdlog::warn("scan {}: {}", job.device_id, poll_fault_name(f));
    registry_.record_fault(job.device_id, f);
    std::lock_guard lock(mu_);
    ++stats_.poll_faults;
    return;
  }
  registry_.mark_seen(job.device_id, now);

  const std::string& room = entry->descriptor.room_id;
  const auto& tracked = cfg_.tracked_macs.at(room);
  std::vector<analytics::OccupancyEvent> arrivals;
  bool any = false;
  {
    std::lock_guard lock(mu_);
    auto& history = scans_[room];
    history.push_back({now, std::set<MacAddress>(scan->macs.begin(), scan->macs.end())});
    std::erase_if(history, [&](const auto& s) { return s.ts <= now - 2 * analytics::kPresenceWindow; });
    auto& present = present_[room];
    for (const auto& mac : tracked) {
      const bool here = analytics::presence(history, mac, now);
      any = any || here;
      if (here && !present.count(mac)) {
        present.insert(mac);
        arrivals.push_back({room, analytics::OccupancyKind::presence_seen, 1.0, now});
        spdlog::info("presence: {} seen in {}", mac.to_string(), room);
      } else if (!here) {
        present.erase(mac);
      }
    }
  }
  for (auto& e : arrivals) record_occupancy(std::move(e));
  ingest(Reading{job.device_id, room, Metric::presence, any ? 1.0 : 0.0, now});
}

void Gateway::run_weather(SimInstant now) {
  if (!weather_ || !weather_due_ || now < *weather_due_) return;
  while (*weather_due_ <= now) *weather_due_ += cfg_.weather_interval;
  const auto outcome = weather_->fetch_outdoor(now);
  {
    std::lock_guard lock(mu_);
    ++stats_.weather_fetches;
    rooms_.insert(std::string(analytics::kWeatherRoomId));
  }
  const auto* sample = std::get_if<analytics::WeatherSample>(&outcome);
  if (!sample) {
    spdlog::warn("weather: {}", analytics::weather_error_name(std::get<analytics::WeatherError>(outcome)));
    return;
  }
  if (sample->stale) return;  // nothing new to store
  if (weather_last_stored_ && sample->reading.timestamp <= *weather_last_stored_) return;
  weather_last_stored_ = sample->reading.timestamp;
  ingest(sample->reading);
}

void Gateway::evaluate(SimInstant now) {
  automation::Snapshot snap;
  snap.now = now;
  {
    std::lock_guard lock(mu_);
    // Several devices can report one metric for a room; the newest reading wins.
    std::map<std::pair<std::string, Metric>, SimInstant> seen;
    for (const auto& [key, r] : latest_) {
      const auto slot = std::make_pair(r.room_id, r.metric);
      auto it = seen.find(slot);
      if (it != seen.end() && it->second > r.timestamp) continue;
      seen[slot] = r.timestamp;
      snap.latest[slot] = r.value;
    }
    for (const auto& room : rooms_) {
      auto it = occupancy_count_.find(room);
      snap.occupancy[room] = it == occupancy_count_.end() ? 0 : it->second;
    }
  }
  send_commands(engine_.check_ack_timeouts(now));
  send_commands(engine_.evaluate(snap));
}

void Gateway::step(SimInstant now) {
  std::lock_guard step(step_mu_);
  for (const auto& job : scheduler_.take_due(now)) {
    const auto entry = registry_.get(job.device_id);
    if (!entry || entry->suspended) continue;
    if (job.kind == JobKind::read)
      poll_once(job);
    else
      run_scan(job, now);
  }
  run_weather(now);
  while (next_tick_ && *next_tick_ <= now) *next_tick_ += automation::kTickInterval;
  evaluate(now);
}

std::optional<SimInstant> Gateway::next_due() const {
  std::optional<SimInstant> t;
  const auto take = [&](std::optional<SimInstant> c) {
    if (c && (!t || *c < *t)) t = c;
  };
  {
    std::lock_guard step(step_mu_);
    for (const auto& j : scheduler_.jobs()) {
      const auto e = registry_.get(j.device_id);
      if (e && !e->suspended) take(j.next_due);
    }
    take(weather_due_);
    take(next_tick_);
  }
  take(engine_.next_deadline());
  return t;
}

std::vector<PollJob> Gateway::jobs() const {
  std::lock_guard step(step_mu_);
  return scheduler_.jobs();
}

void Gateway::ingest(Reading r) {
  r.timestamp = std::chrono::floor<std::chrono::seconds>(r.timestamp);
  std::string line;
  {
    std::lock_guard ingest(ingest_mu_);
    const auto status = store_.append(r);
    if (status != tstore::AppendStatus::ok) {
      spdlog::warn("store rejected {} {} at {}: {}", r.device_id, metric_name(r.metric),
                   format_iso8601(r.timestamp), tstore::append_status_name(status));
      std::lock_guard lock(mu_);
      ++stats_.store_rejected;
      return;
    }
    if (profiled(r.metric)) profile_.update(r);
    {
      std::lock_guard lock(mu_);
      ++stats_.stored;
      latest_[{r.device_id, r.metric}] = r;
    }
    // Published only after the append returned, i.e. after the row is durable.
    stream_.publish(reading_json(r).dump());
  }
}

void Gateway::record_occupancy(analytics::OccupancyEvent e) {
  std::lock_guard lock(mu_);
  auto& events = occupancy_events_[e.room_id];
  events.push_back(e);
  if (e.kind == analytics::OccupancyKind::camera_count) occupancy_count_[e.room_id] = static_cast<int>(e.value);
}

std::optional<IntakeError> Gateway::intake_zwave(const protosim::ZwaveFrame& f) {
  const auto id = registry_.by_zwave(f.node_id);
  if (!id) {
    spdlog::warn("zwave intake: {} from node {}", intake_error_name(IntakeError::unknown_node), f.node_id);
    std::lock_guard lock(mu_);
    ++stats_.intake_dropped;
    return IntakeError::unknown_node;
  }
  const auto entry = registry_.get(*id);
  const std::string& room = entry->descriptor.room_id;
  const SimInstant now = clock_.now();
  const bool on = f.value == protosim::kZwaveOn;
  if (f.value != protosim::kZwaveOn && f.value != protosim::kZwaveOff) {
    spdlog::warn("zwave intake: node {} sent value {:#04x}", f.node_id, f.value);
    std::lock_guard lock(mu_);
    ++stats_.intake_dropped;
    return IntakeError::invalid;
  }
  registry_.mark_seen(*id, now);

  switch (f.cmd_class) {
    case protosim::kCmdDoor:
      record_occupancy({room, on ? analytics::OccupancyKind::door_open : analytics::OccupancyKind::door_closed,
                        on ? 1.0 : 0.0, now});
      ingest(Reading{*id, room, Metric::door, on ? 1.0 : 0.0, now});
      break;
    case protosim::kCmdMotion:
      record_occupancy({room, analytics::OccupancyKind::motion, on ? 1.0 : 0.0, now});
      ingest(Reading{*id, room, Metric::motion, on ? 1.0 : 0.0, now});
      break;
    case protosim::kCmdRelayAck: {
      auto res = engine_.reconcile_ack(*id, on, f.seq);
      if (std::holds_alternative<automation::AutomationError>(res)) {
        spdlog::warn("zwave intake: {} {} seq {}", *id,
                     automation::automation_error_name(std::get<automation::AutomationError>(res)), f.seq);
        return IntakeError::invalid;
      }
      ingest(Reading{*id, room, Metric::relay, on ? 1.0 : 0.0, now});
      break;
    }
    default:
      spdlog::warn("zwave intake: node {} sent unexpected command class {:#04x}", f.node_id, f.cmd_class);
      return IntakeError::invalid;
  }
  notify();
  return std::nullopt;
}

std::optional<IntakeError> Gateway::intake_mesh(std::uint16_t node, const meshnet::SensorPayload& p) {
  const auto id = registry_.by_mesh(node);
  if (!id) {
    spdlog::warn("mesh intake: {} from node {:#06x}", intake_error_name(IntakeError::unknown_node), node);
    std::lock_guard lock(mu_);
    ++stats_.intake_dropped;
    return IntakeError::unknown_node;
  }
  const auto entry = registry_.get(*id);
  Reading r{*id, entry->descriptor.room_id, p.metric, p.value(), from_epoch_seconds(p.ts)};
  if (!is_valid(r)) {
    std::lock_guard lock(mu_);
    ++stats_.intake_dropped;
    return IntakeError::invalid;
  }
  registry_.mark_seen(*id, clock_.now());
  ingest(r);
  notify();
  return std::nullopt;
}

std::optional<IntakeError> Gateway::intake_camera(const std::string& camera_id, int count, SimInstant at) {
  std::string room;
  {
    std::lock_guard lock(mu_);
    auto it = cameras_.find(camera_id);
    if (it == cameras_.end()) {
      ++stats_.intake_dropped;
      return IntakeError::unknown_device;
    }
    room = it->second;
  }
  analytics::OccupancyEvent e{room, analytics::OccupancyKind::camera_count, static_cast<double>(count), at};
  if (!analytics::is_valid(e)) {
    spdlog::warn("camera {}: rejected count {}", camera_id, count);
    std::lock_guard lock(mu_);
    ++stats_.intake_dropped;
    return IntakeError::invalid;
  }
  record_occupancy(e);
  ingest(Reading{camera_id, room, Metric::camera_count, static_cast<double>(count), at});
  notify();
  return std::nullopt;
}

bool Gateway::send_command(const automation::RelayCommand& c) {
  const auto entry = registry_.get(c.relay_id);
  const auto* node = entry ? std::get_if<ZwaveNodeId>(&entry->descriptor.address) : nullptr;
  ZwaveLink* link = nullptr;
  {
    std::lock_guard lock(mu_);
    auto it = zwave_links_.find(c.relay_id);
    if (it != zwave_links_.end()) link = it->second.get();
  }
  if (!node || !link) {
    spdlog::warn("relay {}: no link, command seq {} not sent", c.relay_id, c.seq);
    return false;
  }
  const protosim::ZwaveFrame f{node->value, protosim::kCmdRelaySet,
                               c.on ? protosim::kZwaveOn : protosim::kZwaveOff, c.seq};
  if (!link->send(f)) return false;
  spdlog::info("relay {} -> {} (seq {}, {}{})", c.relay_id, c.on ? "on" : "off", c.seq,
               c.origin == automation::CommandOrigin::rule     ? "rule "
               : c.origin == automation::CommandOrigin::manual ? "manual"
                                                               : "retry",
               c.rule_id);
  std::lock_guard lock(mu_);
  ++stats_.relay_frames;
  return true;
}

void Gateway::send_commands(const std::vector<automation::RelayCommand>& cmds) {
  for (const auto& c : cmds) send_command(c);
}

std::variant<RelayResult, automation::AutomationError> Gateway::set_relay(const std::string& relay_id,
                                                                          OperatorMode mode,
                                                                          std::optional<bool> on) {
  const SimInstant now = clock_.now();
  if (mode == OperatorMode::clear || (mode == OperatorMode::automatic && !on)) {
    auto res = engine_.clear_manual(relay_id);
    if (auto* err = std::get_if<automation::AutomationError>(&res)) return *err;
    notify();
    return RelayResult{std::get<automation::RelayState>(res), false};
  }
  if (!on) throw std::invalid_argument("relay state required");
  auto res = mode == OperatorMode::manual ? engine_.apply_manual(relay_id, *on, now)
                                          : engine_.command(relay_id, *on, now);
  if (auto* err = std::get_if<automation::AutomationError>(&res)) return *err;
  auto& op = std::get<automation::Engine::OperatorResult>(res);
  bool sent = false;
  if (op.command) sent = send_command(*op.command);
  notify();
  auto state = engine_.relay(relay_id);
  return RelayResult{state ? *state : op.state, sent};
}

void Gateway::start() {
  if (scheduler_thread_.joinable()) return;
  connect_push_devices();
  scheduler_thread_ = std::jthread([this](std::stop_token st) { scheduler_loop(st); });
}

void Gateway::stop() {
  if (scheduler_thread_.joinable()) {
    scheduler_thread_.request_stop();
    notify();
    scheduler_thread_.join();
  }
}

void Gateway::notify() {
  {
    std::lock_guard lock(wake_mu_);
    woken_ = true;
  }
  wake_cv_.notify_all();
}

void Gateway::scheduler_loop(std::stop_token st) {
  while (!st.stop_requested()) {
    step(clock_.now());
    const auto due = next_due();
    const auto now = clock_.now();
    auto wait = due ? clock_.to_wall(std::max(SimDuration::zero(), *due - now)) : std::chrono::seconds(1);
    std::unique_lock lock(wake_mu_);
    wake_cv_.wait_for(lock, st, wait, [&] { return woken_; });
    woken_ = false;
  }
}

std::set<std::string> Gateway::rooms() const {
  std::lock_guard lock(mu_);
  return rooms_;
}

bool Gateway::has_room(const std::string& room_id) const {
  std::lock_guard lock(mu_);
  return rooms_.count(room_id) != 0;
}

bool Gateway::has_device(const std::string& device_id) const {
  if (registry_.get(device_id)) return true;
  std::lock_guard lock(mu_);
  return cameras_.count(device_id) != 0 || device_id == analytics::kWeatherDeviceId;
}

std::map<std::string, std::string> Gateway::cameras() const {
  std::lock_guard lock(mu_);
  return cameras_;
}

std::vector<Reading> Gateway::latest_for_room(const std::string& room_id) const {
  std::vector<Reading> out;
  std::lock_guard lock(mu_);
  for (const auto& [key, r] : latest_)
    if (r.room_id == room_id) out.push_back(r);
  std::stable_sort(out.begin(), out.end(), [](const Reading& a, const Reading& b) { return a.metric < b.metric; });
  return out;
}

analytics::BandSet Gateway::bands() const {
  std::lock_guard lock(mu_);
  return cfg_.bands;
}

void Gateway::set_band(const analytics::ComfortBand& b) {
  analytics::validate_band(b);
  std::lock_guard lock(mu_);
  cfg_.bands[b.metric] = b;
}

analytics::ComfortReport Gateway::comfort(const std::string& room_id, SimInstant from, SimInstant to) const {
  return analytics::comfort_report(store_, room_id, from, to, bands(), cfg_.light_threshold);
}

analytics::OccupancyLedger Gateway::occupancy(const std::string& room_id) const {
  std::vector<analytics::OccupancyEvent> events;
  {
    std::lock_guard lock(mu_);
    auto it = occupancy_events_.find(room_id);
    if (it != occupancy_events_.end()) events = it->second;
  }
  std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.ts < b.ts; });
  return analytics::occupancy_ledger(started_at_, events);
}

int Gateway::occupancy_count(const std::string& room_id) const {
  std::lock_guard lock(mu_);
  auto it = occupancy_count_.find(room_id);
  return it == occupancy_count_.end() ? 0 : it->second;
}

void Gateway::add_feedback(const analytics::FeedbackRecord& f) {
  std::lock_guard lock(mu_);
  feedback_.push_back(f);
  std::ofstream out(store_.root() / "feedback.jsonl", std::ios::app);
  out << feedback_json(f).dump() << '\n';
}

std::vector<analytics::FeedbackRecord> Gateway::feedback() const {
  std::lock_guard lock(mu_);
  return feedback_;
}

GatewayStats Gateway::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

std::uint64_t Gateway::zwave_frames_received(const std::string& device_id) const {
  auto it = zwave_links_.find(device_id);
  return it == zwave_links_.end() ? 0 : it->second->received();
}

std::uint64_t Gateway::zwave_frames_written(const std::string& device_id) const {
  auto it = zwave_links_.find(device_id);
  return it == zwave_links_.end() ? 0 : it->second->written();
}

}  // namespace roomsense::gateway
