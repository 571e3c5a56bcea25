#include "cascade/attack.hpp"

#include "doctest.h"
#include "toy.hpp"

#include <random>

using namespace cascade;

namespace {

AttackSchedule single_node(std::vector<double> lambda) {
  AttackSchedule s;
  s.nodes = {0};
  s.change_mw = Matrix(static_cast<Index>(lambda.size()), 1);
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    s.epochs.push_back(static_cast<double>(k));
    s.change_mw(static_cast<Index>(k), 0) = lambda[k];
  }
  s.load_mw = s.change_mw;
  s.equilibrium_mw = Vector::Zero(1);
  return s;
}

GridCase flat_load(double total_mw) {
  GridCase g;
  Bus b;
  b.kind = BusKind::load;
  b.p_load = total_mw / 100;
  b.p_load_max = 2 * b.p_load;
  g.buses = {b};
  return g;
}

}  // namespace

TEST_CASE("load update: unclamped and clamped branches") {
  // C * w = -0.4 with C = 1.
  CHECK(next_load_change(500, -0.4, 1.0, 1000) == doctest::Approx(0.4));
  CHECK(next_load_change(590, -20, 1.0, 600) == doctest::Approx(10));
  CHECK(next_load_change(5, 20, 1.0, 600) == doctest::Approx(-5));
  CHECK(next_load_change(300, 0.0, 3.0, 600) == 0.0);
  CHECK(updated_load(500, -0.4, 1.0, 1000) == doctest::Approx(500.4));
  CHECK(updated_load(590, -20, 1.0, 600) == 600);
  CHECK(updated_load(5, 20, 1.0, 600) == 0);
}

TEST_CASE("load update: post-update load stays in [0, P_L_max]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> cap(0, 2000), frac(0, 1), w(-0.2, 0.2), c(0, 5000);
  for (int k = 0; k < 10000; ++k) {
    const double pmax = cap(rng), chi = frac(rng) * pmax, omega = w(rng), gain = c(rng);
    const double after = updated_load(chi, omega, gain, pmax);
    const double lambda = next_load_change(chi, omega, gain, pmax);
    REQUIRE(after >= 0.0);
    REQUIRE(after <= pmax);
    const double raw = chi - gain * omega;
    if (raw > 0 && raw < pmax && lambda != 0 && omega != 0) REQUIRE((lambda > 0) == (omega < 0));
  }
}

TEST_CASE("schedule: epochs run at multiples of I below the horizon") {
  CHECK(attack_epochs(20, 60) == std::vector<double>{0, 20, 40});
  CHECK(attack_epochs(60, 60) == std::vector<double>{0});
  CHECK(attack_epochs(7, 60).size() == 9);
  CHECK_THROWS_AS(attack_epochs(0, 60), ValidationError);
}

TEST_CASE("schedule: matches a hand-run clamped recursion") {
  const GridCase g = toy::three_bus();
  AttackVector a;
  a.nodes = {1, 2};
  a.initial_mw = Vector(2);
  a.initial_mw << 50, 10;
  a.interval_s = 10;
  a.gain = 800;
  const std::vector<Vector> omega = [] {
    std::vector<Vector> w;
    const double seq[][3] = {{0, -0.01, 0.02}, {0, 0.05, -0.03}, {0, -0.2, 0.004}, {0, 0.0, 0.5}, {0, 0.01, -0.01}};
    for (auto& s : seq) w.push_back(Eigen::Vector3d(s[0], s[1], s[2]));
    return w;
  }();
  const AttackSchedule s =
      realize_schedule(a, g, 60, [&](Index k, double) { return omega[static_cast<std::size_t>(k - 1)]; });
  REQUIRE(s.epoch_count() == 6);

  // Oracle: start from equilibrium, add lambda0 clipped to the headroom, then
  // load <- min(max(load - C w, 0), max) at every later epoch.
  double load[2] = {60, 40};
  const double cap[2] = {120, 80};
  double change[6][2];
  for (int j = 0; j < 2; ++j) {
    change[0][j] = std::min(a.initial_mw(j), cap[j] - load[j]);
    load[j] += change[0][j];
  }
  for (int k = 1; k < 6; ++k)
    for (int j = 0; j < 2; ++j) {
      const double w = omega[static_cast<std::size_t>(k - 1)](j + 1);
      double next = load[j] - a.gain * w;
      next = next < 0 ? 0 : (next > cap[j] ? cap[j] : next);
      change[k][j] = next - load[j];
      load[j] = next;
    }
  for (int k = 0; k < 6; ++k)
    for (int j = 0; j < 2; ++j) {
      CAPTURE(k);
      CAPTURE(j);
      CHECK(s.change_mw(k, j) == doctest::Approx(change[k][j]).epsilon(1e-12));
    }
  CHECK(s.load_mw(5, 0) == doctest::Approx(load[0]));
  CHECK(s.load_mw(5, 1) == doctest::Approx(load[1]));
}

TEST_CASE("schedule: zero gain is a static attack") {
  const GridCase g = toy::three_bus();
  AttackVector a;
  a.nodes = {1};
  a.initial_mw = Vector::Constant(1, 25);
  a.interval_s = 5;
  a.gain = 0;
  const AttackSchedule s = realize_schedule(a, g, 60, [](Index, double) { return Eigen::Vector3d(0, -0.3, 0.2); });
  CHECK(s.change_mw(0, 0) == 25);
  CHECK(s.change_mw.bottomRows(s.epoch_count() - 1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("metrics: cumulative attack") {
  CHECK(cumulative_attack(single_node({0, 0, 0}))(0) == 0.0);
  CHECK(cumulative_attack(single_node({3, -2, 1}))(0) == doctest::Approx(6));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 40);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> l(8);
    double net = 0;
    for (double& v : l) net += (v = n(rng));
    CHECK(cumulative_attack(single_node(l))(0) >= std::abs(net) - 1e-9);
  }
}

TEST_CASE("metrics: average network load change") {
  AttackSchedule one = single_node({0});
  one.nodes = {0, 1};
  one.change_mw = Matrix(1, 2);
  one.change_mw << 3, 4;
  CHECK(avg_network_load_change(one) == doctest::Approx(7));
  AttackSchedule two = one;
  two.epochs = {0, 1};
  two.change_mw = Matrix(2, 2);
  two.change_mw << 3, 4, -5, 2;
  CHECK(avg_network_load_change(two) == doctest::Approx(7));
  CHECK(avg_network_load_change(single_node({0, 0})) == 0.0);
  CHECK_THROWS_AS(avg_network_load_change(two, 0), MetricError);
}

TEST_CASE("metrics: vulnerability ratio") {
  const GridCase g = flat_load(1000);
  CHECK(vulnerability_ratio(single_node({0, 0}), g) == 0.0);
  CHECK(vulnerability_ratio(single_node({100}), g) == doctest::Approx(0.1));
  CHECK(vulnerability_ratio(single_node({100, -100, 50}), g) == doctest::Approx(0.1));
  CHECK(vulnerability_ratio(single_node({5000}), g) == 1.0);
  CHECK_THROWS_AS(vulnerability_ratio(single_node({1}), flat_load(0)), MetricError);

  // Every load node driven to its cap of 2 P_L and held there.
  const GridCase toy3 = toy::three_bus();
  AttackVector a;
  a.nodes = {1, 2};
  a.initial_mw = Vector::Constant(2, 1000);
  a.interval_s = 10;
  a.gain = 0;
  const AttackSchedule s = realize_schedule(a, toy3, 60, [](Index, double) { return Vector::Zero(3).eval(); });
  CHECK(vulnerability_ratio(s, toy3) == doctest::Approx(1.0));
}
