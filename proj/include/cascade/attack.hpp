#pragma once

#include "cascade/grid.hpp"

#include <functional>
#include <vector>

namespace cascade {

/// One dynamic load-altering attack x = (lambda0, I, tau, C). Loads are in
/// MW; `gain` converts per-unit frequency deviation into MW.
struct AttackVector {
  std::vector<Index> nodes;  ///< vulnerable bus indices
  Vector initial_mw;         ///< lambda0, one entry per node, >= 0
  int interval_s = 60;       ///< I, seconds between epochs, >= 1
  int scenario = 2;          ///< tau in 1..4
  double gain = 0;           ///< C, MW per pu frequency

  bool operator==(const AttackVector& o) const {
    return nodes == o.nodes && initial_mw == o.initial_mw && interval_s == o.interval_s &&
           scenario == o.scenario && gain == o.gain;
  }
};

/// Realized time-stamped load changes. Row k of `change_mw` is lambda(t_k);
/// row k of `load_mw` is the nodal load right after that update.
struct AttackSchedule {
  std::vector<Index> nodes;
  std::vector<double> epochs;  ///< t_k in seconds, t_0 = 0
  Matrix change_mw;            ///< epochs x nodes
  Matrix load_mw;              ///< epochs x nodes
  Vector equilibrium_mw;       ///< pre-attack load per node

  Index epoch_count() const { return static_cast<Index>(epochs.size()); }
};

struct AttackMetrics {
  Vector cumulative_mw;  ///< Sigma_i
  double average_change_mw = 0;  ///< mu over all realized epochs
  double vulnerability = 0;      ///< nu
};

/// Frequency-proportional update with clamping:
/// clamp(load_before - gain * frequency, 0, max_load).
double updated_load(double load_before_mw, double frequency, double gain, double max_load_mw);

/// lambda = updated_load(...) - load_before.
double next_load_change(double load_before_mw, double frequency, double gain, double max_load_mw);

/// Epoch times t_k = k * interval for t_k < horizon.
std::vector<double> attack_epochs(int interval_s, double horizon_s);

/// Online construction of a schedule, interleaved with a simulation. The
/// caller owns the nodal net loads (in MW) and hands them in at each epoch.
class ScheduleBuilder {
public:
  ScheduleBuilder(const AttackVector& attack, const GridCase& grid, double horizon_s);

  const std::vector<double>& epochs() const { return schedule_.epochs; }

  /// t_0 update: lambda0 clamped into the nodal headroom.
  void apply_initial(Vector& load_mw);
  /// t_k update for k >= 1 using the nodal frequency at the epoch instant.
  void apply_epoch(Index k, const Vector& frequency, Vector& load_mw);

  const AttackSchedule& schedule() const { return schedule_; }
  AttackSchedule take() { return std::move(schedule_); }

private:
  void record(Index k, const Vector& load_mw);

  AttackVector attack_;
  Vector max_load_mw_;
  AttackSchedule schedule_;
};

/// Realize the schedule against a frequency feedback (epoch index, time) ->
/// per-bus frequency vector, with loads changed only by the attack.
AttackSchedule realize_schedule(const AttackVector& attack, const GridCase& grid, double horizon_s,
                                const std::function<Vector(Index, double)>& feedback);

Vector cumulative_attack(const AttackSchedule& schedule);

/// Mean over the first h realized epochs of the network-total |lambda|.
double avg_network_load_change(const AttackSchedule& schedule, Index h);
double avg_network_load_change(const AttackSchedule& schedule);

/// Peak network-total |attacked-load deviation from equilibrium| over the
/// equilibrium total load of the case, saturated at 1.
double vulnerability_ratio(const AttackSchedule& schedule, const GridCase& grid);

AttackMetrics attack_metrics(const AttackSchedule& schedule, const GridCase& grid);

}  // namespace cascade
