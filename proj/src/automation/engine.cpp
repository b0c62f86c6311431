#include "roomsense/automation/engine.hpp"

#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace roomsense::automation {

std::string_view comparator_symbol(Comparator c) {
  switch (c) {
    case Comparator::lt: return "<";
    case Comparator::le: return "<=";
    case Comparator::gt: return ">";
    case Comparator::ge: return ">=";
    case Comparator::eq: return "==";
  }
  return "";
}

std::optional<Comparator> parse_comparator(std::string_view s) {
  for (Comparator c : {Comparator::lt, Comparator::le, Comparator::gt, Comparator::ge, Comparator::eq})
    if (comparator_symbol(c) == s) return c;
  return std::nullopt;
}

bool compare(double value, Comparator c, double threshold) {
  switch (c) {
    case Comparator::lt: return value < threshold;
    case Comparator::le: return value <= threshold;
    case Comparator::gt: return value > threshold;
    case Comparator::ge: return value >= threshold;
    case Comparator::eq: return value == threshold;
  }
  return false;
}

std::string_view relay_actual_name(RelayActual a) {
  switch (a) {
    case RelayActual::off: return "off";
    case RelayActual::on: return "on";
    case RelayActual::unknown: return "unknown";
  }
  return "";
}

std::string_view relay_mode_name(RelayMode m) { return m == RelayMode::manual ? "manual" : "auto"; }

std::string_view automation_error_name(AutomationError e) {
  switch (e) {
    case AutomationError::unknown_relay: return "UNKNOWN_RELAY";
    case AutomationError::unexpected_ack: return "UNEXPECTED_ACK";
    case AutomationError::manual_conflict: return "MANUAL_CONFLICT";
  }
  return "";
}

void validate_rules(const std::vector<Rule>& rules, const std::set<std::string>& relays) {
  std::set<std::string> ids;
  for (const auto& r : rules) {
    if (r.id.empty()) throw std::invalid_argument("rule without id");
    if (!ids.insert(r.id).second) throw std::invalid_argument(fmt::format("duplicate rule id '{}'", r.id));
    if (r.hold < SimDuration::zero()) throw std::invalid_argument(fmt::format("rule '{}': negative hold", r.id));
    if (!relays.count(r.relay_id))
      throw std::invalid_argument(fmt::format("rule '{}': relay '{}' is not registered", r.id, r.relay_id));
    if (r.conditions.empty()) throw std::invalid_argument(fmt::format("rule '{}': no conditions", r.id));
    for (const auto& c : r.conditions)
      if (const auto* m = std::get_if<MetricCondition>(&c); m && !(m->hysteresis >= 0))
        throw std::invalid_argument(fmt::format("rule '{}': negative hysteresis", r.id));
  }
}

Engine::Engine(std::vector<Rule> rules, const std::set<std::string>& relays, RelayActual initial)
    : rules_(std::move(rules)) {
  validate_rules(rules_, relays);
  for (const auto& r : rules_) {
    RuleState rs;
    rs.latched.assign(r.conditions.size(), false);
    rule_states_.push_back(std::move(rs));
  }
  for (const auto& id : relays) {
    Relay r;
    r.state.relay_id = id;
    r.state.actual = initial;
    relays_.emplace(id, std::move(r));
  }
}

bool Engine::condition_holds(const Rule& rule, RuleState& rs, std::size_t i, const Snapshot& snap) {
  const Condition& cond = rule.conditions[i];
  if (const auto* m = std::get_if<MetricCondition>(&cond)) {
    auto it = snap.latest.find({rule.room_id, m->metric});
    if (it == snap.latest.end()) {
      if (!rs.warned_missing) {
        spdlog::warn("rule '{}': no {} value for room '{}', condition false", rule.id,
                     metric_name(m->metric), rule.room_id);
        rs.warned_missing = true;
      }
      rs.latched[i] = false;
      return false;
    }
    const double v = it->second;
    bool holds = compare(v, m->cmp, m->threshold);
    if (rs.latched[i] && !holds) {
      switch (m->cmp) {
        case Comparator::lt: holds = v < m->threshold + m->hysteresis; break;
        case Comparator::le: holds = v <= m->threshold + m->hysteresis; break;
        case Comparator::gt: holds = v > m->threshold - m->hysteresis; break;
        case Comparator::ge: holds = v >= m->threshold - m->hysteresis; break;
        case Comparator::eq: break;
      }
    }
    rs.latched[i] = holds;
    return holds;
  }
  if (const auto* o = std::get_if<OccupancyCondition>(&cond)) {
    auto it = snap.occupancy.find(rule.room_id);
    const int count = it == snap.occupancy.end() ? 0 : it->second;
    return compare(count, o->cmp, o->count);
  }
  const auto& tod = std::get<TimeOfDayCondition>(cond);
  const SimDuration now = time_of_day(snap.now);
  if (tod.from <= tod.to) return now >= tod.from && now < tod.to;
  return now >= tod.from || now < tod.to;
}

bool Engine::wants_command(const Relay& r, bool target) const {
  const RelayActual want = target ? RelayActual::on : RelayActual::off;
  if (r.state.actual == want) return false;
  if (r.state.pending && r.state.pending->on == target) return false;
  if (r.failed_target == target) return false;
  return true;
}

RelayCommand Engine::issue(Relay& r, bool on, CommandOrigin origin, std::string rule_id, SimInstant now) {
  const std::uint8_t seq = r.next_seq++;
  r.state.pending = PendingCommand{seq, on, now, false};
  r.failed_target.reset();
  ++issued_;
  return RelayCommand{r.state.relay_id, on, seq, origin, std::move(rule_id)};
}

std::vector<RelayCommand> Engine::evaluate(const Snapshot& snap) {
  std::lock_guard lock(mu_);
  for (auto& [id, r] : relays_) {
    if (r.state.mode == RelayMode::manual && r.state.manual_expires && snap.now >= *r.state.manual_expires) {
      spdlog::info("relay '{}': manual override expired, back to auto", id);
      r.state.mode = RelayMode::automatic;
      r.state.manual_expires.reset();
      r.state.manual_state.reset();
    }
  }

  // relay -> (target, rule id); later rules overwrite earlier ones
  std::map<std::string, std::pair<bool, std::string>> desired;
  auto want = [&](const Rule& rule, bool target) {
    auto [it, inserted] = desired.try_emplace(rule.relay_id, target, rule.id);
    if (!inserted) {
      if (it->second.first != target)
        spdlog::warn("rules '{}' and '{}' disagree on relay '{}'; '{}' wins", it->second.second, rule.id,
                     rule.relay_id, rule.id);
      it->second = {target, rule.id};
    }
  };

  for (std::size_t k = 0; k < rules_.size(); ++k) {
    const Rule& rule = rules_[k];
    RuleState& rs = rule_states_[k];
    bool all = true;
    for (std::size_t i = 0; i < rule.conditions.size(); ++i)
      all = condition_holds(rule, rs, i, snap) && all;
    if (all) {
      if (!rs.since) rs.since = snap.now;
    } else {
      rs.since.reset();
    }
    const bool was_firing = rs.firing;
    rs.firing = all && snap.now - *rs.since >= rule.hold;
    if (rs.firing) {
      want(rule, rule.target_on);
    } else if (was_firing && rule.revert_on_release) {
      want(rule, !rule.target_on);
    }
  }

  std::vector<RelayCommand> out;
  for (auto& [relay_id, choice] : desired) {
    Relay& r = relays_.at(relay_id);
    if (r.state.mode == RelayMode::manual) continue;
    if (!wants_command(r, choice.first)) continue;
    out.push_back(issue(r, choice.first, CommandOrigin::rule, choice.second, snap.now));
    spdlog::info("rule '{}' switches relay '{}' {}", choice.second, relay_id, choice.first ? "on" : "off");
  }
  return out;
}

std::variant<Engine::OperatorResult, AutomationError> Engine::apply_manual(const std::string& relay_id,
                                                                         bool on, SimInstant now) {
  std::lock_guard lock(mu_);
  auto it = relays_.find(relay_id);
  if (it == relays_.end()) return AutomationError::unknown_relay;
  Relay& r = it->second;
  const bool repeat = r.state.mode == RelayMode::manual && r.state.manual_state == on;
  const RelayActual want = on ? RelayActual::on : RelayActual::off;
  if (repeat && (r.state.actual == want || (r.state.pending && r.state.pending->on == on)))
    return OperatorResult{std::nullopt, r.state};
  r.state.mode = RelayMode::manual;
  r.state.manual_state = on;
  r.state.manual_expires = now + kManualExpiry;
  auto cmd = issue(r, on, CommandOrigin::manual, {}, now);
  return OperatorResult{std::move(cmd), r.state};
}

std::variant<Engine::OperatorResult, AutomationError> Engine::command(const std::string& relay_id, bool on,
                                                                    SimInstant now) {
  std::lock_guard lock(mu_);
  auto it = relays_.find(relay_id);
  if (it == relays_.end()) return AutomationError::unknown_relay;
  Relay& r = it->second;
  if (r.state.mode == RelayMode::manual) {
    if (r.state.manual_state != on) return AutomationError::manual_conflict;
    return OperatorResult{std::nullopt, r.state};
  }
  const RelayActual want = on ? RelayActual::on : RelayActual::off;
  if (r.state.actual == want || (r.state.pending && r.state.pending->on == on))
    return OperatorResult{std::nullopt, r.state};
  auto cmd = issue(r, on, CommandOrigin::manual, {}, now);
  return OperatorResult{std::move(cmd), r.state};
}

std::variant<RelayState, AutomationError> Engine::clear_manual(const std::string& relay_id) {
  std::lock_guard lock(mu_);
  auto it = relays_.find(relay_id);
  if (it == relays_.end()) return AutomationError::unknown_relay;
  it->second.state.mode = RelayMode::automatic;
  it->second.state.manual_expires.reset();
  it->second.state.manual_state.reset();
  return it->second.state;
}

std::variant<RelayState, AutomationError> Engine::reconcile_ack(const std::string& relay_id, bool on,
                                                                std::optional<std::uint8_t> seq) {
  std::lock_guard lock(mu_);
  auto it = relays_.find(relay_id);
  if (it == relays_.end()) return AutomationError::unknown_relay;
  Relay& r = it->second;
  if (!r.state.pending || (seq && *seq != r.state.pending->seq)) {
    spdlog::warn("relay '{}': UNEXPECTED_ACK ({})", relay_id, on ? "on" : "off");
    return AutomationError::unexpected_ack;
  }
  r.state.actual = on ? RelayActual::on : RelayActual::off;
  r.state.pending.reset();
  r.failed_target.reset();
  return r.state;
}

std::vector<RelayCommand> Engine::check_ack_timeouts(SimInstant now) {
  std::lock_guard lock(mu_);
  std::vector<RelayCommand> out;
  for (auto& [id, r] : relays_) {
    auto& p = r.state.pending;
    if (!p || now - p->sent_at < kAckTimeout) continue;
    r.state.actual = RelayActual::unknown;
    if (!p->retried) {
      spdlog::warn("relay '{}': no ack for seq {}, retrying", id, p->seq);
      p->retried = true;
      p->sent_at = now;
      ++issued_;
      out.push_back(RelayCommand{id, p->on, p->seq, CommandOrigin::retry, {}});
    } else {
      spdlog::error("relay '{}': no ack after retry, state unknown", id);
      r.failed_target = p->on;
      p.reset();
    }
  }
  return out;
}

std::optional<SimInstant> Engine::next_deadline() const {
  std::lock_guard lock(mu_);
  std::optional<SimInstant> best;
  auto consider = [&](SimInstant t) {
    if (!best || t < *best) best = t;
  };
  for (std::size_t k = 0; k < rules_.size(); ++k) {
    const auto& rs = rule_states_[k];
    if (rs.since && !rs.firing) consider(*rs.since + rules_[k].hold);
  }
  for (const auto& [id, r] : relays_) {
    if (r.state.manual_expires) consider(*r.state.manual_expires);
    if (r.state.pending) consider(r.state.pending->sent_at + kAckTimeout);
  }
  return best;
}

std::optional<RelayState> Engine::relay(const std::string& relay_id) const {
  std::lock_guard lock(mu_);
  auto it = relays_.find(relay_id);
  if (it == relays_.end()) return std::nullopt;
  return it->second.state;
}

std::vector<RelayState> Engine::relays() const {
  std::lock_guard lock(mu_);
  std::vector<RelayState> out;
  for (const auto& [id, r] : relays_) out.push_back(r.state);
  return out;
}

std::size_t Engine::commands_issued() const {
  std::lock_guard lock(mu_);
  return issued_;
}

}  // namespace roomsense::automation
