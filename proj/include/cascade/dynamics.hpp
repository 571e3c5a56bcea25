#pragma once

#include "cascade/attack.hpp"
#include "cascade/equilibrium.hpp"
#include "cascade/protection.hpp"

#include <optional>
#include <string>

namespace cascade {

struct SimulationOptions {
  double dt = 0.005;       ///< s
  double horizon = 60.0;   ///< s
  DynamicsParams params;
  double output_stride = 0.0;  ///< s between trajectory samples; 0 keeps none
  bool protection = true;      ///< false: relays are monitored but never trip
  bool stop_on_first_event = false;
};

/// A single component removed at t = 0 before the simulation starts.
struct Outage {
  enum class Kind { none, generator, load, line };
  Kind kind = Kind::none;
  Index index = 0;  ///< bus index for generator/load, line index for line

  std::string describe(const GridCase& grid) const;
};

struct SimRecord {
  std::vector<DynamicState> trajectory;
  EventLog events;
  IndicatorState final_indicators;
  Vector peak_rocof;          ///< max |filtered RoCoF| per bus, pu/s
  std::optional<AttackSchedule> schedule;
  PeakRatios peaks;
  Vector final_load;          ///< pu per bus
  double max_abs_frequency = 0;
  bool diverged = false;
  double failure_time = 0;    ///< s, set when diverged
  double end_time = 0;
  Index islands = 1;
};

/// Time derivative of `s` under indicators `ind` and per-bus net load (pu).
DynamicState derivatives(const OperatingPoint& op, const DynamicState& s, const IndicatorState& ind,
                         const Vector& net_load, const DynamicsParams& params = {});

/// Fixed-step RK4 from the equilibrium of `op`. If `attack` is given its
/// schedule is realized online: lambda0 at t = 0, later epochs use the
/// victim bus frequency at the epoch instant. Relays run after every step.
/// Divergence does not throw: the record is flagged and returned with the
/// events logged up to the failure time.
SimRecord integrate(const OperatingPoint& op, const AttackVector* attack, const ProtectionConfig& cfg,
                    const SimulationOptions& options = {}, const Outage& outage = {});

/// Debug dump of a record (MW units, external bus ids).
std::string sim_record_json(const SimRecord& record, const GridCase& grid);

}  // namespace cascade
