#include "cascade/n1.hpp"

#include "doctest.h"
#include "toy.hpp"

using namespace cascade;

namespace {

struct Bench {
  GridCase grid = toy::three_bus();
  OperatingPoint op = make_operating_point(grid);
  ProtectionConfig cfg = default_protection(grid);
  DynamicState s = op.initial_state();
  IndicatorState ind = IndicatorState::all_connected(op.grid);
  Vector load = op.equilibrium_load();
  EventLog log;
  RelayState relay{op.grid, cfg, 0.005};

  bool trip() { return check_and_trip(s, op.grid, cfg, op.equilibrium_load(), ind, load, log, relay); }
};

}  // namespace

TEST_CASE("relays: over-frequency sheds the generator at its current output") {
  Bench b;
  b.s.frequency(0) = b.cfg.ofgs_limit * 1.01;
  b.s.governor(0) = -0.2;
  CHECK(b.trip());
  REQUIRE(b.log.size() == 1);
  CHECK(b.log.events[0].kind == EventKind::ofgs);
  CHECK(b.ind.generator_connected[0] == 0);
  CHECK(b.log.events[0].magnitude == doctest::Approx((b.op.grid.buses[0].p_gen - 0.2) * 100));
  // Already disconnected: nothing more happens.
  CHECK_FALSE(b.trip());
}

TEST_CASE("relays: one UFLS stage per crossing, 10 % of equilibrium load") {
  Bench b;
  const auto& th = b.cfg.ufls_thresholds;
  b.s.frequency(2) = 0.5 * (th[0] + th[1]);
  CHECK(b.trip());
  REQUIRE(b.log.size() == 1);
  CHECK(b.log.events[0].kind == EventKind::ufls);
  CHECK(b.log.events[0].target == 2);
  CHECK(b.ind.ufls_stage[2] == 1);
  CHECK(b.log.events[0].magnitude == doctest::Approx(0.1 * 40));
  CHECK(b.load(2) == doctest::Approx(0.9 * 0.4));
  // The next stage needs the next threshold.
  CHECK_FALSE(b.trip());
}

TEST_CASE("relays: UFLS saturates after four stages") {
  Bench b;
  b.s.frequency(1) = -1.0;
  for (int k = 0; k < 10; ++k) b.trip();
  CHECK(b.ind.ufls_stage[1] == kUflsStages);
  CHECK(b.log.count(EventKind::ufls) == 4);
  CHECK(cascade_size(b.log, b.op.grid).total_mw == doctest::Approx(0.4 * 60));
  CHECK(b.load(1) == doctest::Approx(0.6 * 0.6));
}

TEST_CASE("relays: RoCoF is a moving average over the window") {
  Bench b;
  const Index window = static_cast<Index>(std::lround(b.cfg.rocof_window / 0.005));
  Vector spike = Vector::Zero(3);
  spike(0) = 1.0;
  b.relay.filter_rocof(spike);
  CHECK(b.relay.rocof()(0) == doctest::Approx(1.0 / static_cast<double>(window)));
  for (Index k = 1; k < window; ++k) b.relay.filter_rocof(Vector::Zero(3));
  CHECK(b.relay.rocof()(0) == doctest::Approx(1.0 / static_cast<double>(window)));
  b.relay.filter_rocof(Vector::Zero(3));
  CHECK(std::abs(b.relay.rocof()(0)) < 1e-15);
  CHECK(b.relay.peak_rocof()(0) == doctest::Approx(1.0 / static_cast<double>(window)));
}

TEST_CASE("relays: interconnector trips above its limit, monitor mode only records") {
  Bench b;
  b.cfg.line_limits = Vector::Constant(2, 1e-4);
  b.relay.monitor_only = true;
  CHECK_FALSE(b.trip());
  CHECK(b.relay.peaks().line > 1.0);
  b.relay.monitor_only = false;
  CHECK(b.trip());
  REQUIRE(b.log.size() == 1);
  CHECK(b.log.events[0].kind == EventKind::line);
  CHECK(b.op.grid.lines[static_cast<std::size_t>(b.log.events[0].target)].is_interconnector);
  CHECK(island_count(b.op.grid, b.ind.line_connected) == 2);
}

TEST_CASE("cascade size: examples") {
  const GridCase g = toy::three_bus();
  EventLog log;
  CHECK(cascade_size(log, g).total_mw == 0.0);
  log.events = {{EventKind::rigs, 1.0, 0, 300}, {EventKind::ufls, 1.2, 1, 50}, {EventKind::ufls, 1.3, 2, 50}};
  const CascadeMetrics m = cascade_size(log, g);
  CHECK(m.total_mw == doctest::Approx(400));
  CHECK(m.area_mw.at(1)[static_cast<std::size_t>(EventKind::ufls)] == doctest::Approx(50));
  CHECK(m.area_mw.at(2)[static_cast<std::size_t>(EventKind::ufls)] == doctest::Approx(50));
  EventLog line;
  line.events = {{EventKind::line, 2.0, 1, 0}};
  const CascadeMetrics l = cascade_size(line, g);
  CHECK(l.total_mw == 0.0);
  CHECK(l.counts[static_cast<std::size_t>(EventKind::line)] == 1);
}

TEST_CASE("protection: document round trip") {
  const GridCase g = toy::three_bus();
  ProtectionConfig c = default_protection(g).scaled(1.7);
  c.trip_delay = 0.05;
  const ProtectionConfig r = parse_protection(serialize_protection(c, g), g);
  CHECK(r.rocof_limit == doctest::Approx(c.rocof_limit));
  CHECK(r.ofgs_limit == doctest::Approx(c.ofgs_limit));
  for (std::size_t k = 0; k < 4; ++k) CHECK(r.ufls_thresholds[k] == doctest::Approx(c.ufls_thresholds[k]));
  CHECK((r.line_limits - c.line_limits).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r.trip_delay == doctest::Approx(0.05));
  CHECK(c.ufls_thresholds[0] == doctest::Approx(1.7 * default_protection(g).ufls_thresholds[0]));
}

TEST_CASE("n-1: outage list skips bridges") {
  // One generator, two loads; both lines of the chain are bridges.
  CHECK(n1_outages(toy::three_bus()).size() == 3);
  // Two generators, two loads, four ring lines.
  CHECK(n1_outages(toy::ring()).size() == 8);
}

TEST_CASE("n-1: a degenerate RoCoF limit fails every outage with RIGS") {
  const GridCase g = toy::ring();
  ProtectionConfig c = default_protection(g);
  c.rocof_limit = 1e-6;
  N1Options o;
  o.simulation.horizon = 5;
  o.threads = 1;
  o.stop_on_first_event = false;
  const N1Report r = verify_n1(g, c, {2}, o);
  CHECK(r.failures.size() == n1_outages(g).size());
  for (const N1Failure& f : r.failures) CHECK(f.events.count(EventKind::rigs) > 0);
}

TEST_CASE("n-1: losing a zero-MW load changes nothing") {
  const GridCase g = toy::three_bus(100, 0);
  const OperatingPoint op = make_operating_point(g);
  SimulationOptions so;
  so.horizon = 10;
  const SimRecord r = integrate(op, nullptr, default_protection(g), so, {Outage::Kind::load, 2});
  CHECK(r.events.empty());
}

TEST_CASE("n-1: calibrated thresholds pass on the toy ring") {
  const GridCase g = toy::ring();
  N1Options o;
  o.simulation.horizon = 20;
  o.threads = 1;
  const CalibrationResult cal = calibrate(g, default_protection(g), kAllScenarios, o);
  CHECK(cal.report.passed());
  CHECK(cal.factor >= 1.0);
  CHECK(verify_n1(g, cal.config, kAllScenarios, o).passed());
}
