#pragma once

#include "cascade/grid.hpp"
#include "cascade/state.hpp"

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace cascade {

inline constexpr std::string_view kProtectionSchema = "cascade-laa-protection/1";

/// Relay thresholds in per-unit. `line_limits` has one entry per line of the
/// case; only interconnector entries are consulted.
struct ProtectionConfig {
  double rocof_limit = 0.02;  ///< pu frequency per second (1 Hz/s at 50 Hz)
  double ofgs_limit = 0.03;   ///< pu frequency
  std::array<double, kUflsStages> ufls_thresholds{-0.020, -0.024, -0.028, -0.032};
  double ufls_fraction = 0.10;
  Vector line_limits;         ///< pu power
  double trip_delay = 0.0;    ///< s a condition must persist before tripping
  double rocof_window = 0.1;  ///< s, moving-average length for relay RoCoF
  double calibration_factor = 1.0;  ///< informational: outward scaling already applied

  /// Thresholds moved outward by `factor` (limits multiplied, the UFLS
  /// thresholds pushed further below zero).
  ProtectionConfig scaled(double factor) const;
};

void validate(const ProtectionConfig& cfg, const GridCase& grid);

/// Relay limits in MW keyed by the line endpoints' external ids.
std::string serialize_protection(const ProtectionConfig& cfg, const GridCase& grid);
ProtectionConfig parse_protection(std::string_view json_text, const GridCase& grid);

enum class EventKind { rigs = 0, ofgs = 1, ufls = 2, line = 3 };
inline constexpr std::size_t kEventKinds = 4;
inline constexpr std::array<EventKind, kEventKinds> kAllEventKinds{EventKind::rigs, EventKind::ofgs,
                                                                  EventKind::ufls, EventKind::line};

std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view text);

struct Event {
  EventKind kind = EventKind::ufls;
  double time = 0;       ///< s
  Index target = 0;      ///< bus index, or line index for line trips
  double magnitude = 0;  ///< MW disconnected (0 for lines)

  bool operator==(const Event&) const = default;
};

struct EventLog {
  std::vector<Event> events;

  bool empty() const { return events.empty(); }
  std::size_t size() const { return events.size(); }
  std::size_t count(EventKind kind) const;
  void append(const EventLog& other);
  bool operator==(const EventLog&) const = default;
};

struct CascadeMetrics {
  double total_mw = 0;                          ///< X
  std::array<std::size_t, kEventKinds> counts{};
  std::array<double, kEventKinds> mw_by_kind{};
  std::map<int, std::array<double, kEventKinds>> area_mw;  ///< area -> MW per kind

  bool operator==(const CascadeMetrics&) const = default;
};

/// X is the MW sum over generator and load events; line trips are counted
/// but add nothing. The area split uses the target bus's area.
CascadeMetrics cascade_size(const EventLog& log, const GridCase& grid);

/// Largest observed value of each relay quantity over its threshold. A ratio
/// above 1 means the relay would have fired (ignoring trip delay).
struct PeakRatios {
  double rocof = 0;
  double ofgs = 0;
  double ufls = 0;
  double line = 0;

  double max() const;
};

/// Per-simulation relay memory: RoCoF moving average and pickup timers.
class RelayState {
public:
  RelayState(const GridCase& grid, const ProtectionConfig& cfg, double dt);

  /// Feed the instantaneous per-bus RoCoF and get back the filtered value.
  const Vector& filter_rocof(const Vector& instantaneous);
  const Vector& rocof() const { return average_; }
  const Vector& peak_rocof() const { return peak_rocof_; }
  const PeakRatios& peaks() const { return peaks_; }

  /// When set, thresholds are evaluated and peaks tracked but nothing trips.
  bool monitor_only = false;

private:
  friend bool check_and_trip(const Eigen::Ref<const Vector>&, const Eigen::Ref<const Vector>&,
                             const Eigen::Ref<const Vector>&, const Eigen::Ref<const Vector>&, double,
                             const GridCase&, const ProtectionConfig&, const Vector&, IndicatorState&,
                             Vector&, EventLog&, RelayState&);

  Eigen::Index window_;
  Matrix history_;  // bus x window ring buffer
  Eigen::Index cursor_ = 0;
  Vector sum_, average_, peak_rocof_;
  Vector rigs_since_, ofgs_since_, ufls_since_, line_since_;
  PeakRatios peaks_;
};

/// Apply the relays once to the state reached at `time`, in the fixed order
/// RIGS, OFGS, UFLS, LINE, ascending index within each kind. Uses the
/// filtered RoCoF already held by `relay`. UFLS removes
/// ufls_fraction * equilibrium load from `net_load` (clamped at zero).
/// Returns true if any indicator changed.
bool check_and_trip(const Eigen::Ref<const Vector>& angle, const Eigen::Ref<const Vector>& frequency,
                    const Eigen::Ref<const Vector>& voltage, const Eigen::Ref<const Vector>& governor,
                    double time, const GridCase& grid, const ProtectionConfig& cfg,
                    const Vector& equilibrium_load, IndicatorState& ind, Vector& net_load, EventLog& log,
                    RelayState& relay);

bool check_and_trip(const DynamicState& s, const GridCase& grid, const ProtectionConfig& cfg,
                    const Vector& equilibrium_load, IndicatorState& ind, Vector& net_load, EventLog& log,
                    RelayState& relay);

/// Number of connected components of the network over live lines.
Index island_count(const GridCase& grid, const std::vector<std::uint8_t>& line_connected);

}  // namespace cascade
