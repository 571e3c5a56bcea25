#include "cascade/n1.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace cascade {

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

ProtectionConfig default_protection(const GridCase& base, const std::vector<int>& scenarios) {
  ProtectionConfig cfg;
  Vector peak = Vector::Zero(static_cast<Index>(base.lines.size()));
  for (int tau : scenarios) {
    const OperatingPoint op = make_operating_point(base, tau);
    for (std::size_t k = 0; k < base.lines.size(); ++k)
      peak(static_cast<Index>(k)) = std::max(peak(static_cast<Index>(k)),
                                             std::abs(line_flow(op.equilibrium.angle, op.equilibrium.voltage, base.lines[k])));
  }
  cfg.line_limits = Vector::Zero(static_cast<Index>(base.lines.size()));
  for (std::size_t k = 0; k < base.lines.size(); ++k) {
    const Line& l = base.lines[k];
    if (!l.is_interconnector) continue;
    cfg.line_limits(static_cast<Index>(k)) = std::max(1.5 * peak(static_cast<Index>(k)), 0.1 * l.flow_limit);
  }
  return cfg;
}

std::vector<Outage> n1_outages(const GridCase& grid) {
  std::vector<Outage> out;
  for (Index g = 0; g < grid.generator_count(); ++g) out.push_back({Outage::Kind::generator, g});
  for (Index i : grid.load_buses()) out.push_back({Outage::Kind::load, i});
  // A bridge outage islands its far side; for a radial generator branch that
  // is the generator outage again, so bridges are left out.
  std::vector<std::uint8_t> live(grid.lines.size(), 1);
  const Index islands = island_count(grid, live);
  for (Index k = 0; k < static_cast<Index>(grid.lines.size()); ++k) {
    live[static_cast<std::size_t>(k)] = 0;
    const bool bridge = island_count(grid, live) > islands;
    live[static_cast<std::size_t>(k)] = 1;
    if (!bridge) out.push_back({Outage::Kind::line, k});
  }
  return out;
}

namespace {

struct Job {
  std::size_t scenario_slot;
  Outage outage;
};

struct Sweep {
  std::vector<SimRecord> records;
  std::vector<Job> jobs;
};

Sweep sweep(const std::vector<OperatingPoint>& ops, const std::vector<int>& scenarios, const ProtectionConfig& cfg,
            const N1Options& options, bool monitor_only) {
  Sweep s;
  for (std::size_t k = 0; k < scenarios.size(); ++k)
    for (const Outage& o : n1_outages(ops[k].grid)) s.jobs.push_back({k, o});
  s.records.resize(s.jobs.size());
  SimulationOptions sim = options.simulation;
  sim.protection = !monitor_only;
  sim.stop_on_first_event = options.stop_on_first_event && !monitor_only;
  sim.output_stride = 0;
  parallel_for(s.jobs.size(), options.threads, [&](std::size_t i) {
    const Job& job = s.jobs[i];
    s.records[i] = integrate(ops[job.scenario_slot], nullptr, cfg, sim, job.outage);
  });
  return s;
}

std::vector<OperatingPoint> operating_points(const GridCase& base, const std::vector<int>& scenarios) {
  std::vector<OperatingPoint> ops;
  for (int tau : scenarios) ops.push_back(make_operating_point(base, tau));
  return ops;
}

void widen(PeakRatios& into, const PeakRatios& p) {
  into.rocof = std::max(into.rocof, p.rocof);
  into.ofgs = std::max(into.ofgs, p.ofgs);
  into.ufls = std::max(into.ufls, p.ufls);
  into.line = std::max(into.line, p.line);
}

N1Report verify_with(const std::vector<OperatingPoint>& ops, const std::vector<int>& scenarios,
                     const ProtectionConfig& cfg, const N1Options& options) {
  Sweep s = sweep(ops, scenarios, cfg, options, false);
  N1Report report;
  report.simulations = s.jobs.size();
  for (std::size_t i = 0; i < s.jobs.size(); ++i) {
    const SimRecord& rec = s.records[i];
    widen(report.worst, rec.peaks);
    if (rec.events.empty() && !rec.diverged) continue;
    const Job& job = s.jobs[i];
    N1Failure f;
    f.scenario = scenarios[job.scenario_slot];
    f.outage = job.outage;
    f.description = job.outage.describe(ops[job.scenario_slot].grid) + (rec.diverged ? " (diverged)" : "");
    f.events = rec.events;
    report.failures.push_back(std::move(f));
  }
  return report;
}

}  // namespace

N1Report verify_n1(const GridCase& base, const ProtectionConfig& cfg, const std::vector<int>& scenarios,
                   const N1Options& options) {
  validate(cfg, base);
  return verify_with(operating_points(base, scenarios), scenarios, cfg, options);
}

CalibrationResult calibrate(const GridCase& base, const ProtectionConfig& initial, const std::vector<int>& scenarios,
                            const N1Options& options, double margin) {
  validate(initial, base);
  const auto ops = operating_points(base, scenarios);
  const Sweep probe = sweep(ops, scenarios, initial, options, true);
  CalibrationResult result;
  for (const SimRecord& rec : probe.records) {
    if (rec.diverged) throw NumericalError("calibration: an outage simulation diverged");
    widen(result.untuned, rec.peaks);
  }
  double factor = std::max(1.0, result.untuned.max() * (1.0 + margin));
  for (int attempt = 0; attempt < 40; ++attempt, factor *= 1.05) {
    result.config = initial.scaled(factor);
    result.factor = factor;
    result.report = verify_with(ops, scenarios, result.config, options);
    if (result.report.passed()) return result;
  }
  return result;
}

}  // namespace cascade
