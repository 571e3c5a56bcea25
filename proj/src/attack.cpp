#include "cascade/attack.hpp"

#include <algorithm>
#include <cmath>

namespace cascade {

double updated_load(double load_before_mw, double frequency, double gain, double max_load_mw) {
  return std::clamp(load_before_mw - gain * frequency, 0.0, max_load_mw);
}

double next_load_change(double load_before_mw, double frequency, double gain, double max_load_mw) {
  return updated_load(load_before_mw, frequency, gain, max_load_mw) - load_before_mw;
}

std::vector<double> attack_epochs(int interval_s, double horizon_s) {
  if (interval_s < 1) throw ValidationError("attack interval must be >= 1 s");
  std::vector<double> out;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * interval_s;
    if (k > 0 && !(t < horizon_s)) break;
    out.push_back(t);
  }
  return out;
}

ScheduleBuilder::ScheduleBuilder(const AttackVector& attack, const GridCase& grid, double horizon_s)
    : attack_(attack) {
  const Index m = static_cast<Index>(attack.nodes.size());
  if (attack.initial_mw.size() != m) throw ValidationError("attack vector: one initial change per node required");
  if (attack.gain < 0) throw ValidationError("attack vector: gain must be non-negative");
  max_load_mw_.resize(m);
  schedule_.nodes = attack.nodes;
  schedule_.equilibrium_mw.resize(m);
  for (Index k = 0; k < m; ++k) {
    const Index i = attack.nodes[static_cast<std::size_t>(k)];
    if (i < 0 || i >= grid.size()) throw ValidationError("attack vector: node index out of range");
    const Bus& b = grid.buses[static_cast<std::size_t>(i)];
    max_load_mw_(k) = b.p_load_max * grid.base_mva;
    schedule_.equilibrium_mw(k) = b.p_load * grid.base_mva;
  }
  schedule_.epochs = attack_epochs(attack.interval_s, horizon_s);
  const Index h = schedule_.epoch_count();
  schedule_.change_mw = Matrix::Zero(h, m);
  schedule_.load_mw = Matrix::Zero(h, m);
}

void ScheduleBuilder::record(Index k, const Vector& load_mw) {
  for (Index j = 0; j < static_cast<Index>(attack_.nodes.size()); ++j)
    schedule_.load_mw(k, j) = load_mw(attack_.nodes[static_cast<std::size_t>(j)]);
}

void ScheduleBuilder::apply_initial(Vector& load_mw) {
  for (Index j = 0; j < static_cast<Index>(attack_.nodes.size()); ++j) {
    const Index i = attack_.nodes[static_cast<std::size_t>(j)];
    const double headroom = std::max(0.0, max_load_mw_(j) - load_mw(i));
    const double lambda = std::clamp(attack_.initial_mw(j), 0.0, headroom);
    schedule_.change_mw(0, j) = lambda;
    load_mw(i) += lambda;
  }
  record(0, load_mw);
}

void ScheduleBuilder::apply_epoch(Index k, const Vector& frequency, Vector& load_mw) {
  for (Index j = 0; j < static_cast<Index>(attack_.nodes.size()); ++j) {
    const Index i = attack_.nodes[static_cast<std::size_t>(j)];
    const double before = std::clamp(load_mw(i), 0.0, max_load_mw_(j));
    const double after = updated_load(before, frequency(i), attack_.gain, max_load_mw_(j));
    schedule_.change_mw(k, j) = after - before;
    load_mw(i) = after;
  }
  record(k, load_mw);
}

AttackSchedule realize_schedule(const AttackVector& attack, const GridCase& grid, double horizon_s,
                                const std::function<Vector(Index, double)>& feedback) {
  ScheduleBuilder builder(attack, grid, horizon_s);
  Vector load_mw(grid.size());
  for (Index i = 0; i < grid.size(); ++i) load_mw(i) = grid.buses[static_cast<std::size_t>(i)].p_load * grid.base_mva;
  builder.apply_initial(load_mw);
  const auto epochs = builder.epochs();
  for (Index k = 1; k < static_cast<Index>(epochs.size()); ++k)
    builder.apply_epoch(k, feedback(k, epochs[static_cast<std::size_t>(k)]), load_mw);
  return builder.take();
}

Vector cumulative_attack(const AttackSchedule& schedule) {
  if (schedule.change_mw.rows() == 0) return Vector::Zero(schedule.change_mw.cols());
  return schedule.change_mw.cwiseAbs().colwise().sum().transpose();
}

double avg_network_load_change(const AttackSchedule& schedule, Index h) {
  if (h < 1) throw MetricError("average network load change needs at least one epoch (h = 0)");
  if (h > schedule.epoch_count()) throw MetricError("average network load change: h exceeds realized epochs");
  return schedule.change_mw.topRows(h).cwiseAbs().sum() / static_cast<double>(h);
}

double avg_network_load_change(const AttackSchedule& schedule) {
  return avg_network_load_change(schedule, schedule.epoch_count());
}

double vulnerability_ratio(const AttackSchedule& schedule, const GridCase& grid) {
  const double total = grid.total_load() * grid.base_mva;
  if (!(total > 0)) throw MetricError("vulnerability ratio undefined: zero total equilibrium load");
  double peak = 0;
  Vector deviation = Vector::Zero(schedule.change_mw.cols());
  for (Index k = 0; k < schedule.epoch_count(); ++k) {
    deviation += schedule.change_mw.row(k).transpose();
    peak = std::max(peak, deviation.cwiseAbs().sum());
  }
  return std::min(1.0, peak / total);
}

AttackMetrics attack_metrics(const AttackSchedule& schedule, const GridCase& grid) {
  AttackMetrics m;
  m.cumulative_mw = cumulative_attack(schedule);
  m.average_change_mw = schedule.epoch_count() > 0 ? avg_network_load_change(schedule) : 0.0;
  m.vulnerability = vulnerability_ratio(schedule, grid);
  return m;
}

}  // namespace cascade
