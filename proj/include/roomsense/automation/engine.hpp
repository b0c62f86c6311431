#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "roomsense/core/metric.hpp"
#include "roomsense/core/time.hpp"

namespace roomsense::automation {

enum class Comparator { lt, le, gt, ge, eq };
std::string_view comparator_symbol(Comparator c);
std::optional<Comparator> parse_comparator(std::string_view s);
bool compare(double value, Comparator c, double threshold);

/// Latched with hysteresis: once true it stays true while the value has not moved
/// past threshold +/- hysteresis (for lt/le the release point is above, for gt/ge
/// below; eq has no latch).
struct MetricCondition {
  Metric metric = Metric::temperature;
  Comparator cmp = Comparator::lt;
  double threshold = 0.0;
  double hysteresis = 0.0;
};

struct OccupancyCondition {
  Comparator cmp = Comparator::eq;
  int count = 0;
};

/// [from, to) within the UTC day; wraps past midnight when from > to.
struct TimeOfDayCondition {
  SimDuration from{};
  SimDuration to{};
};

using Condition = std::variant<MetricCondition, OccupancyCondition, TimeOfDayCondition>;

struct Rule {
  std::string id;
  std::string room_id;
  std::vector<Condition> conditions;  // ANDed
  SimDuration hold{};
  std::string relay_id;
  bool target_on = false;
  /// Drive the relay to the opposite state once when the rule stops firing.
  bool revert_on_release = false;
};

enum class RelayActual { off, on, unknown };
std::string_view relay_actual_name(RelayActual a);
enum class RelayMode { automatic, manual };
std::string_view relay_mode_name(RelayMode m);

struct PendingCommand {
  std::uint8_t seq = 0;
  bool on = false;
  SimInstant sent_at{};
  bool retried = false;
};

struct RelayState {
  std::string relay_id;
  RelayActual actual = RelayActual::off;
  RelayMode mode = RelayMode::automatic;
  std::optional<SimInstant> manual_expires;  // set iff mode is manual
  std::optional<bool> manual_state;          // the state the override asked for
  std::optional<PendingCommand> pending;
};

enum class CommandOrigin { rule, manual, retry };

struct RelayCommand {
  std::string relay_id;
  bool on = false;
  std::uint8_t seq = 0;
  CommandOrigin origin = CommandOrigin::rule;
  std::string rule_id;  // for rule-originated commands
};

struct Snapshot {
  SimInstant now{};
  std::map<std::pair<std::string, Metric>, double> latest;  // (room, metric) -> value
  std::map<std::string, int> occupancy;                      // room -> count
};

enum class AutomationError { unknown_relay, unexpected_ack, manual_conflict };
std::string_view automation_error_name(AutomationError e);

inline constexpr SimDuration kManualExpiry = sim_minutes(60);
inline constexpr SimDuration kAckTimeout = sim_seconds(10);
inline constexpr SimDuration kTickInterval = sim_seconds(60);

/// Throws std::invalid_argument on negative hold/hysteresis, duplicate rule ids,
/// rules naming unregistered relays, or empty condition lists.
void validate_rules(const std::vector<Rule>& rules, const std::set<std::string>& relays);

/// Rule evaluation plus the relay state table. Thread-safe; the gateway API and the
/// evaluation activity share one instance.
class Engine {
 public:
  Engine(std::vector<Rule> rules, const std::set<std::string>& relays,
         RelayActual initial = RelayActual::off);

  /// Evaluates every rule against the snapshot. Returns at most one command per
  /// relay; the caller sends them and they are recorded as pending.
  std::vector<RelayCommand> evaluate(const Snapshot& snap);

  struct OperatorResult {
    std::optional<RelayCommand> command;  // empty when the relay already is (or is going) there
    RelayState state;
  };

  /// Manual on/off: mode becomes manual for 60 sim-minutes and a command is issued.
  /// Repeating the active override is a no-op that sends nothing.
  std::variant<OperatorResult, AutomationError> apply_manual(const std::string& relay_id, bool on,
                                                             SimInstant now);
  /// One-shot operator command that leaves the mode automatic. MANUAL_CONFLICT when
  /// an override of the opposite state is active.
  std::variant<OperatorResult, AutomationError> command(const std::string& relay_id, bool on,
                                                        SimInstant now);
  /// Back to automatic without any frame.
  std::variant<RelayState, AutomationError> clear_manual(const std::string& relay_id);

  /// Confirms the pending command. `seq`, when given, must match it.
  std::variant<RelayState, AutomationError> reconcile_ack(const std::string& relay_id, bool on,
                                                          std::optional<std::uint8_t> seq = std::nullopt);

  /// Pending commands older than 10 sim-seconds: the first timeout marks the relay
  /// unknown and re-sends once; the second gives up.
  std::vector<RelayCommand> check_ack_timeouts(SimInstant now);

  /// Earliest instant at which evaluate()/check_ack_timeouts() could change anything
  /// without new inputs (hold expiry, manual expiry, ack deadline).
  std::optional<SimInstant> next_deadline() const;

  std::optional<RelayState> relay(const std::string& relay_id) const;
  std::vector<RelayState> relays() const;
  const std::vector<Rule>& rules() const { return rules_; }
  std::size_t commands_issued() const;

 private:
  struct RuleState {
    std::optional<SimInstant> since;  // conjunction true continuously since
    bool firing = false;
    std::vector<bool> latched;        // per metric condition
    bool warned_missing = false;
  };
  struct Relay {
    RelayState state;
    std::optional<bool> failed_target;  // gave up waiting for an ack for this target
    std::uint8_t next_seq = 0;
  };

  bool condition_holds(const Rule& rule, RuleState& rs, std::size_t i, const Snapshot& snap);
  RelayCommand issue(Relay& r, bool on, CommandOrigin origin, std::string rule_id, SimInstant now);
  bool wants_command(const Relay& r, bool target) const;

  std::vector<Rule> rules_;
  mutable std::mutex mu_;
  std::vector<RuleState> rule_states_;
  std::map<std::string, Relay> relays_;
  std::size_t issued_ = 0;
};

}  // namespace roomsense::automation
