#include "cascade/grid.hpp"
#include "cascade/kron.hpp"

#include "doctest.h"
#include "toy.hpp"

#include <random>

using namespace cascade;

namespace {

std::string data_path(const char* name) { return std::string(CASCADE_DATA_DIR) + "/" + name; }

// Independent dense oracle: eliminate one bus at a time by Gaussian pivoting.
Matrix eliminate_sequentially(Matrix y, std::vector<Index> drop) {
  std::sort(drop.rbegin(), drop.rend());
  for (Index e : drop) {
    const Index n = y.rows();
    Matrix next(n - 1, n - 1);
    for (Index i = 0, r = 0; i < n; ++i) {
      if (i == e) continue;
      for (Index j = 0, c = 0; j < n; ++j) {
        if (j == e) continue;
        next(r, c++) = y(i, j) - y(i, e) * y(e, j) / y(e, e);
      }
      ++r;
    }
    y = next;
  }
  return y;
}

}  // namespace

TEST_CASE("kron: keeping every bus returns the input") {
  Matrix y(3, 3);
  y << -2, 1, 1, 1, -3, 2, 1, 2, -3;
  const std::vector<Index> keep{0, 1, 2};
  CHECK((kron_reduce(y, keep) - y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kron: eliminating the middle of a unit chain leaves 0.5") {
  std::vector<Line> lines{{0, 1, 1.0, false, 0}, {1, 2, 1.0, false, 0}};
  const Matrix b = laplacian(3, lines);
  const Matrix r = kron_reduce(b, std::vector<Index>{0, 2});
  CHECK(r(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(r(0, 0) == doctest::Approx(-0.5).epsilon(1e-14));
}

TEST_CASE("kron: matches sequential pivoting on a random network") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.5, 5.0);
  std::vector<Line> lines;
  for (Index i = 0; i + 1 < 8; ++i) lines.push_back({i, i + 1, u(rng), false, 0});
  lines.push_back({0, 5, u(rng), false, 0});
  lines.push_back({2, 7, u(rng), false, 0});
  lines.push_back({3, 6, u(rng), false, 0});
  const Matrix b = laplacian(8, lines);
  const Matrix r = kron_reduce(b, std::vector<Index>{0, 1, 4, 6});
  const Matrix oracle = eliminate_sequentially(b, {2, 3, 5, 7});
  CHECK((r - oracle).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((r - r.transpose()).cwiseAbs().maxCoeff() == 0.0);
  // Rows of a reduced Laplacian still sum to zero.
  CHECK(r.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("kron: singular eliminated block throws") {
  Matrix y = Matrix::Zero(3, 3);
  y(0, 0) = -1;
  y(0, 1) = y(1, 0) = 1;
  y(1, 1) = -1;
  CHECK_THROWS_AS(kron_reduce(y, std::vector<Index>{0, 1}), ReductionError);
  CHECK_THROWS_AS(kron_reduce(y, std::vector<Index>{}), ReductionError);
}

TEST_CASE("case: the reduced IEEE-39 case has 10 generators and 17 loads") {
  const GridCase g = load_case(data_path("ieee39.json"));
  CHECK(g.size() == 27);
  CHECK(g.generator_count() == 10);
  Index with_load = 0;
  for (Index i = 0; i < g.generator_count(); ++i) with_load += g.buses[static_cast<std::size_t>(i)].has_load();
  CHECK(with_load == 2);
  CHECK((g.susceptance - g.susceptance.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (const Bus& b : g.buses) CHECK(b.inertia > 0);
  for (const Line& l : g.lines) CHECK(g.susceptance(l.from, l.to) == doctest::Approx(l.susceptance));
}

TEST_CASE("case: parse, serialize, parse is the identity") {
  const GridCase a = load_case(data_path("ieee39.json"));
  const GridCase b = parse_case(serialize_case(a));
  CHECK(a == b);
  const GridCase t = toy::three_bus();
  CHECK(parse_case(serialize_case(t)) == t);
}

TEST_CASE("case: malformed documents are rejected") {
  CHECK_THROWS_AS(parse_case(""), ParseError);
  CHECK_THROWS_AS(parse_case("{}"), Error);
  std::string bad = toy::three_bus_json();
  bad.replace(bad.find("\"x_pu\": 0.1"), 11, "\"x_pu\": -0.1");
  CHECK_THROWS_AS(parse_case(bad), ValidationError);
  std::string overload = toy::three_bus_json();
  overload.replace(overload.find("\"p_load_max_mw\": 120"), 20, "\"p_load_max_mw\": 10");
  CHECK_THROWS_AS(parse_case(overload), ValidationError);
}

TEST_CASE("case: transit buses are removed by Kron reduction") {
  std::string doc = R"({"schema": "cascade-laa-case/1", "base_mva": 100, "nominal_frequency_hz": 50,
    "buses": [
      {"id": 1, "area": 1, "kind": "generator", "p_gen_mw": 50, "p_max_mw": 80, "inertia_mws": 300,
       "time_constant_s": 5, "reactance_pu": 0.2},
      {"id": 2, "area": 1, "kind": "transit"},
      {"id": 3, "area": 1, "kind": "load", "p_load_mw": 50, "p_load_max_mw": 100, "time_constant_s": 2,
       "reactance_pu": 1}],
    "lines": [{"from": 1, "to": 2, "b_pu": 1}, {"from": 2, "to": 3, "b_pu": 1}]})";
  const GridCase g = parse_case(doc);
  REQUIRE(g.size() == 2);
  REQUIRE(g.lines.size() == 1);
  CHECK(g.lines[0].susceptance == doctest::Approx(0.5));
  // Load inertia defaults to 1 % of the mean generator inertia.
  CHECK(g.buses[1].inertia == doctest::Approx(0.01 * g.buses[0].inertia));
}

TEST_CASE("scenario: factors scale load and generation from the base case") {
  const GridCase base = load_case(data_path("ieee39.json"));
  CHECK(apply_scenario(base, 2).total_load() == doctest::Approx(base.total_load()));
  CHECK(apply_scenario(base, 1).total_load() == doctest::Approx(0.4 * base.total_load()));
  const GridCase evening = apply_scenario(base, 4);
  CHECK(evening.total_load() == doctest::Approx(1.3 * base.total_load()));
  CHECK(evening.total_generation() == doctest::Approx(1.3 * base.total_generation()));
  for (std::size_t i = 0; i < base.buses.size(); ++i) {
    CHECK(evening.buses[i].p_max == base.buses[i].p_max);
    CHECK(evening.buses[i].p_load_max == base.buses[i].p_load_max);
  }
  const GridCase night = apply_scenario(base, 1);
  CHECK(apply_scenario(night, 1).total_load() == doctest::Approx(0.16 * base.total_load()));
  CHECK_THROWS(apply_scenario(base, 5));
}
