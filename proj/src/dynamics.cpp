#include "cascade/dynamics.hpp"

#include "cascade/rk4.hpp"
#include "json_util.hpp"

#include <cmath>

namespace cascade {

using detail::json;

std::string Outage::describe(const GridCase& grid) const {
  switch (kind) {
    case Kind::none: return "none";
    case Kind::generator: return "generator " + std::to_string(grid.buses.at(static_cast<std::size_t>(index)).id);
    case Kind::load: return "load " + std::to_string(grid.buses.at(static_cast<std::size_t>(index)).id);
    case Kind::line: return "line " + grid.line_name(index);
  }
  return "?";
}

DynamicState derivatives(const OperatingPoint& op, const DynamicState& s, const IndicatorState& ind,
                         const Vector& net_load, const DynamicsParams& params) {
  SwingModel model = op.model(params);
  model.set_indicators(ind);
  const Vector x = model.pack(s);
  Vector dx;
  model.evaluate(x, net_load, dx);
  return model.unpack(dx, s.time);
}

SimRecord integrate(const OperatingPoint& op, const AttackVector* attack, const ProtectionConfig& cfg,
                    const SimulationOptions& options, const Outage& outage) {
  if (!(options.horizon > 0)) throw ValidationError("simulation horizon must be positive");
  if (!(options.dt > 0)) throw ValidationError("simulation step must be positive");
  const GridCase& grid = op.grid;
  const Index n = grid.size();
  const double base = grid.base_mva;

  SwingModel model = op.model(options.params);
  IndicatorState ind = IndicatorState::all_connected(grid);
  Vector load = op.equilibrium_load();
  Vector shed_base = load;
  switch (outage.kind) {
    case Outage::Kind::none: break;
    case Outage::Kind::generator:
      if (outage.index < 0 || outage.index >= grid.generator_count()) throw ValidationError("outage: not a generator");
      ind.generator_connected[static_cast<std::size_t>(outage.index)] = 0;
      break;
    case Outage::Kind::load:
      if (outage.index < 0 || outage.index >= n) throw ValidationError("outage: bus out of range");
      load(outage.index) = 0;
      shed_base(outage.index) = 0;
      break;
    case Outage::Kind::line:
      if (outage.index < 0 || outage.index >= static_cast<Index>(grid.lines.size()))
        throw ValidationError("outage: line out of range");
      ind.line_connected[static_cast<std::size_t>(outage.index)] = 0;
      break;
  }
  model.set_indicators(ind);

  RelayState relay(grid, cfg, options.dt);
  relay.monitor_only = !options.protection;

  SimRecord rec;
  const long steps = std::lround(options.horizon / options.dt);

  std::optional<ScheduleBuilder> builder;
  std::vector<long> epoch_steps;
  Vector load_mw;
  if (attack) {
    if (attack->scenario != grid.scenario)
      throw ValidationError("attack scenario does not match the operating point");
    builder.emplace(*attack, grid, options.horizon);
    for (double t : builder->epochs()) epoch_steps.push_back(std::lround(t / options.dt));
    load_mw = load * base;
    builder->apply_initial(load_mw);
    load = load_mw / base;
  }
  std::size_t next_epoch = 1;

  Vector x = model.pack(op.initial_state());
  Vector k1(x.size());
  model.evaluate(x, load, k1);
  Rk4<Vector> rk4(x.size());
  auto rhs = [&](const Vector& s, Vector& d) { model.evaluate(s, load, d); };

  const long stride = options.output_stride > 0 ? std::max(1L, std::lround(options.output_stride / options.dt)) : 0;
  if (stride) rec.trajectory.push_back(model.unpack(x, 0.0));

  double t = 0;
  for (long s = 1; s <= steps; ++s) {
    rk4.step(rhs, x, k1, options.dt);
    t = static_cast<double>(s) * options.dt;

    const double wmax = model.frequency(x).cwiseAbs().maxCoeff();
    if (!x.allFinite() || !(wmax <= options.params.divergence_limit)) {
      rec.diverged = true;
      rec.failure_time = t;
      break;
    }
    rec.max_abs_frequency = std::max(rec.max_abs_frequency, wmax);

    model.evaluate(x, load, k1);
    relay.filter_rocof(k1.segment(n, n));
    bool dirty = false;
    if (check_and_trip(model.angle(x), model.frequency(x), model.voltage(x), model.governor(x), t, grid, cfg,
                       shed_base, ind, load, rec.events, relay)) {
      model.set_indicators(ind);
      dirty = true;
    }
    if (builder && next_epoch < epoch_steps.size() && epoch_steps[next_epoch] == s) {
      load_mw = load * base;
      builder->apply_epoch(static_cast<Index>(next_epoch), model.frequency(x), load_mw);
      load = load_mw / base;
      ++next_epoch;
      dirty = true;
    }
    if (dirty) model.evaluate(x, load, k1);

    if (stride && s % stride == 0) rec.trajectory.push_back(model.unpack(x, t));
    if (options.stop_on_first_event && !rec.events.empty()) break;
  }

  rec.end_time = t;
  rec.final_indicators = ind;
  rec.peak_rocof = relay.peak_rocof();
  rec.peaks = relay.peaks();
  rec.final_load = load;
  rec.islands = island_count(grid, ind.line_connected);
  if (builder) {
    AttackSchedule sched = builder->take();
    // Epochs never reached (early stop or divergence) are dropped.
    const Index realized = static_cast<Index>(next_epoch);
    if (realized < sched.epoch_count()) {
      sched.epochs.resize(static_cast<std::size_t>(realized));
      sched.change_mw.conservativeResize(realized, Eigen::NoChange);
      sched.load_mw.conservativeResize(realized, Eigen::NoChange);
    }
    rec.schedule = std::move(sched);
  }
  return rec;
}

std::string sim_record_json(const SimRecord& rec, const GridCase& grid) {
  json doc;
  const double base = grid.base_mva;
  json events = json::array();
  for (const Event& e : rec.events.events) {
    const bool is_line = e.kind == EventKind::line;
    events.push_back({{"kind", to_string(e.kind)},
                      {"time_s", e.time},
                      {"target", is_line ? grid.line_name(e.target)
                                         : std::to_string(grid.buses[static_cast<std::size_t>(e.target)].id)},
                      {"mw", e.magnitude}});
  }
  doc["events"] = events;
  const CascadeMetrics m = cascade_size(rec.events, grid);
  json metrics;
  metrics["cascade_mw"] = m.total_mw;
  for (auto k : kAllEventKinds) {
    metrics["count"][std::string(to_string(k))] = m.counts[static_cast<std::size_t>(k)];
    metrics["mw"][std::string(to_string(k))] = m.mw_by_kind[static_cast<std::size_t>(k)];
  }
  if (rec.schedule && rec.schedule->epoch_count() > 0) {
    const AttackMetrics am = attack_metrics(*rec.schedule, grid);
    metrics["mu_mw"] = am.average_change_mw;
    metrics["nu"] = am.vulnerability;
    metrics["sigma_mw"] = std::vector<double>(am.cumulative_mw.begin(), am.cumulative_mw.end());
  }
  doc["metrics"] = metrics;
  doc["diverged"] = rec.diverged;
  if (rec.diverged) doc["failure_time_s"] = rec.failure_time;
  doc["end_time_s"] = rec.end_time;
  doc["islands"] = rec.islands;
  doc["max_abs_frequency_pu"] = rec.max_abs_frequency;
  doc["peak_rocof_pu_per_s"] = std::vector<double>(rec.peak_rocof.begin(), rec.peak_rocof.end());
  doc["peak_ratios"] = {{"rocof", rec.peaks.rocof}, {"ofgs", rec.peaks.ofgs}, {"ufls", rec.peaks.ufls},
                        {"line", rec.peaks.line}};
  json ind;
  ind["generator_connected"] = rec.final_indicators.generator_connected;
  ind["line_connected"] = rec.final_indicators.line_connected;
  ind["ufls_stage"] = rec.final_indicators.ufls_stage;
  doc["final_indicators"] = ind;
  json loads = json::array();
  for (Index i = 0; i < rec.final_load.size(); ++i) loads.push_back(rec.final_load(i) * base);
  doc["final_load_mw"] = loads;
  if (rec.schedule) {
    json sched;
    std::vector<int> ids;
    for (Index i : rec.schedule->nodes) ids.push_back(grid.buses[static_cast<std::size_t>(i)].id);
    sched["nodes"] = ids;
    sched["epochs_s"] = rec.schedule->epochs;
    json rows = json::array();
    for (Index k = 0; k < rec.schedule->epoch_count(); ++k) {
      const Vector row = rec.schedule->change_mw.row(k).transpose();
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    sched["change_mw"] = rows;
    doc["schedule"] = sched;
  }
  if (!rec.trajectory.empty()) {
    json traj = json::array();
    for (const DynamicState& s : rec.trajectory)
      traj.push_back({{"t", s.time},
                      {"angle", std::vector<double>(s.angle.begin(), s.angle.end())},
                      {"frequency", std::vector<double>(s.frequency.begin(), s.frequency.end())},
                      {"voltage", std::vector<double>(s.voltage.begin(), s.voltage.end())},
                      {"governor", std::vector<double>(s.governor.begin(), s.governor.end())}});
    doc["trajectory"] = traj;
  }
  return doc.dump(2) + "\n";
}

}  // namespace cascade
