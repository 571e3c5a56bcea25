#include "cascade/analysis.hpp"
#include "cascade/campaign.hpp"
#include "cascade/n1.hpp"

#include "doctest.h"
#include "toy.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cascade;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cascade_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CampaignConfig ring_config(const fs::path& dir) {
  const fs::path case_file = dir / "ring.json";
  std::ofstream(case_file) << serialize_case(toy::ring());
  CampaignConfig c;
  c.case_path = case_file;
  c.attack.lambda0_max_mw = 100;
  c.attack.t_max_s = 10;
  c.sampler.proposals = 100;
  c.sampler.chains = 2;
  c.sampler.seed = 99;
  c.sampler.lambda_scale_mw = 10;
  c.sampler.interval_scale_s = 1;
  c.sampler.pilot_proposals = 20;
  c.sampler.pilot_batch = 10;
  c.sampler.checkpoint_every = 25;
  c.threads = 1;
  c.output_dir = dir / "out";
  // Uncalibrated thresholds: the smoke run needs attacks that fire, not N-1 security.
  const GridCase g = toy::ring();
  c.protection_path = dir / "protection.json";
  std::ofstream(c.protection_path) << serialize_protection(default_protection(g), g);
  return c;
}

std::string row(std::uint64_t id, int tau, int interval, double mu, double nu, std::array<double, 3> mw,
                std::map<int, double> area_ufls = {}) {
  std::ostringstream o;
  const double x = mw[0] + mw[1] + mw[2];
  o << R"({"id":)" << id << R"(,"chain":0,"unique":true,"attack":{"scenario":)" << tau << R"(,"interval_s":)"
    << interval << R"(,"gain":1},"metrics":{"x_mw":)" << x << R"(,"mu_mw":)" << mu << R"(,"nu":)" << nu
    << R"(,"x_by_kind_mw":{"RIGS":)" << mw[0] << R"(,"OFGS":)" << mw[1] << R"(,"UFLS":)" << mw[2]
    << R"(,"LINE":0})";
  if (!area_ufls.empty()) {
    o << R"(,"x_area_mw":{)";
    bool first = true;
    for (auto [a, v] : area_ufls) {
      o << (first ? "" : ",") << '"' << a << R"(":{"RIGS":0,"OFGS":0,"UFLS":)" << v << R"(,"LINE":0})";
      first = false;
    }
    o << "}";
  }
  o << R"(},"events":{"count":{"RIGS":0,"OFGS":0,"UFLS":1,"LINE":0}}})";
  return o.str() + "\n";
}

}  // namespace

TEST_CASE("config: serialize and parse agree") {
  CampaignConfig c;
  c.case_path = "/data/case.json";
  c.protection_path = "/data/prot.json";
  c.attack.vulnerable_buses = {3, 4};
  c.attack.scenarios = {2, 4};
  c.sampler.seed = 123456789012345ULL;
  c.simulation.params.avr_gain = 100;
  const CampaignConfig r = parse_config(serialize_config(c));
  CHECK(r.case_path == c.case_path);
  CHECK(r.protection_path == c.protection_path);
  CHECK(r.attack.vulnerable_buses == c.attack.vulnerable_buses);
  CHECK(r.attack.scenarios == c.attack.scenarios);
  CHECK(r.sampler.seed == c.sampler.seed);
  CHECK(r.simulation.params.avr_gain == 100);
  CHECK(serialize_config(r) == serialize_config(c));
}

TEST_CASE("config: relative paths resolve against the config directory") {
  const CampaignConfig c = parse_config(
      R"({"schema": "cascade-laa-config/1", "case": "grid.json", "protection": "auto", "output": "../out"})", "/a/b");
  CHECK(c.case_path == fs::path("/a/b/grid.json"));
  CHECK(c.protection_path.empty());
}

TEST_CASE("config: bad documents are rejected") {
  CHECK_THROWS_AS(parse_config(R"({"schema": "other", "case": "x"})"), ParseError);
  CHECK_THROWS_AS(parse_config("[1,2"), ParseError);
  CampaignConfig c;
  c.case_path = "x.json";
  c.attack.c_min = 6;
  CHECK_THROWS_AS(validate(c), ValidationError);
  c.attack.c_min = 0.5;
  c.sampler.proposals = 0;
  CHECK_THROWS_AS(validate(c), ValidationError);
}

TEST_CASE("attack document round trip") {
  const GridCase g = toy::ring();
  AttackVector a;
  a.nodes = {2, 3};
  a.initial_mw = Eigen::Vector2d(12.5, 0);
  a.interval_s = 7;
  a.scenario = 4;
  a.gain = 2.25;
  CHECK(parse_attack(serialize_attack(a, g), g) == a);
  CHECK_THROWS_AS(parse_attack(R"({"scenario": 5, "lambda0_mw": []})", g), ValidationError);
  CHECK_THROWS_AS(parse_attack(R"({"lambda0_mw": [{"bus": 1, "mw": 3}]})", g), ValidationError);
}

TEST_CASE("campaign model: encode and decode are inverse inside the box") {
  const fs::path dir = scratch("model");
  const CampaignConfig cfg = ring_config(dir);
  const GridCase g = load_case(cfg.case_path);
  const CampaignModel m = make_campaign_model(g, default_protection(g), cfg);
  CHECK(m.dimension() == 5);
  AttackVector a;
  a.nodes = m.nodes;
  a.initial_mw = Eigen::Vector2d(30, 70);
  a.interval_s = 4;
  a.scenario = 3;
  a.gain = 1.5;
  const Vector x = m.encode(a);
  CHECK(m.in_box(x));
  CHECK(m.decode(x) == a);
  Vector out = x;
  out(0) = -1;
  CHECK_FALSE(m.in_box(out));
  // Every integer interval owns a unit-length slice of its coordinate.
  Vector edge = x;
  edge(m.interval_coord()) = 0.5;
  CHECK(m.decode(edge).interval_s == 1);
  edge(m.interval_coord()) = cfg.attack.t_max_s + 0.49;
  CHECK(m.decode(edge).interval_s == cfg.attack.t_max_s);
}

TEST_CASE("condition oracle: null attack is outside A, verdicts are repeatable") {
  const fs::path dir = scratch("oracle");
  const CampaignConfig cfg = ring_config(dir);
  const GridCase g = load_case(cfg.case_path);
  const CampaignModel m = make_campaign_model(g, default_protection(g).scaled(3), cfg);
  AttackVector null;
  null.nodes = m.nodes;
  null.initial_mw = Vector::Zero(2);
  null.interval_s = 5;
  null.scenario = 2;
  null.gain = 0;
  const OracleResult r0 = condition_oracle(m, null);
  CHECK_FALSE(r0.in_set);
  CHECK(r0.record.events.empty());
  const AttackVector w = find_witness(m);
  const OracleResult a = condition_oracle(m, w), b = condition_oracle(m, w);
  CHECK(a.in_set);
  CHECK(a.record.events == b.record.events);
}

TEST_CASE("campaign: toy smoke run, rerun and resume are byte-identical") {
  const fs::path dir = scratch("smoke");
  CampaignConfig cfg = ring_config(dir);
  const CampaignSummary s = run_campaign(cfg);
  CHECK(s.proposals == 100);
  CHECK(s.acceptance_rate >= 0.0);
  CHECK(s.acceptance_rate <= 1.0);
  CHECK(s.records > 0);
  for (const char* f : {"records.jsonl", "records.csv", "lambda0.jsonl", "summary.json", "checkpoint.json",
                        "protection.json"})
    CHECK(fs::exists(cfg.output_dir / f));
  const auto rows = read_records(cfg.output_dir / "records.jsonl");
  CHECK(rows.size() == s.records);
  for (const auto& r : rows) CHECK(r.x_mw >= 0);

  CampaignConfig again = cfg;
  again.output_dir = dir / "again";
  again.threads = 2;
  run_campaign(again);
  for (const char* f : {"records.jsonl", "records.csv", "lambda0.jsonl"})
    CHECK(slurp(cfg.output_dir / f) == slurp(again.output_dir / f));

  CampaignConfig part = cfg;
  part.output_dir = dir / "part";
  part.sampler.proposals = 50;
  run_campaign(part);
  part.sampler.proposals = 100;
  CampaignOptions resume;
  resume.resume = true;
  run_campaign(part, resume);
  for (const char* f : {"records.jsonl", "records.csv", "lambda0.jsonl"})
    CHECK(slurp(cfg.output_dir / f) == slurp(part.output_dir / f));

  CampaignConfig changed = part;
  changed.sampler.seed = 1;
  CHECK_THROWS_AS(run_campaign(changed, resume), ValidationError);
}

TEST_CASE("analyze: synthetic records give hand-computed means") {
  std::string text;
  text += row(0, 1, 5, 500, 0.05, {0, 0, 0});
  text += row(1, 1, 15, 1500, 0.15, {100, 0, 20}, {{1, 20}});
  text += row(2, 4, 15, 2500, 0.18, {300, 0, 60}, {{1, 40}, {2, 20}});
  text += row(3, 4, 45, 3000, 0.55, {0, 50, 150}, {{2, 150}});
  const Analysis a = analyze(parse_records(text));

  REQUIRE(a.tau.tau == std::vector<int>{1, 4});
  CHECK(a.tau.groups[0].count == 2);
  CHECK(a.tau.groups[0].x_mw == doctest::Approx(60));
  CHECK(a.tau.groups[1].x_mw == doctest::Approx(280));
  CHECK(a.tau.groups[1].kind_mw[static_cast<std::size_t>(EventKind::ufls)] == doctest::Approx(105));

  CHECK(a.nu.bins[0].count == 1);
  CHECK(a.nu.bins[0].x_mw == 0.0);
  CHECK(a.nu.bins[1].count == 2);
  CHECK(a.nu.bins[1].x_mw == doctest::Approx(240));
  CHECK(a.nu.bins[5].x_mw == doctest::Approx(200));
  CHECK(a.nu.bins[9].count == 0);

  REQUIRE(a.area.areas == std::vector<int>{1, 2});
  CHECK(a.area.mean_mw[0][static_cast<std::size_t>(EventKind::ufls)] == doctest::Approx(15));
  CHECK(a.area.mean_mw[1][static_cast<std::size_t>(EventKind::ufls)] == doctest::Approx(42.5));

  // mu bins span [0, 3 GW] in tenths; interval rows [1,10), [10,20), ...
  CHECK(a.heatmap.at(0, 1).count == 1);
  CHECK(a.heatmap.at(1, 5).x_mw == doctest::Approx(120));
  CHECK(a.heatmap.at(1, 8).x_mw == doctest::Approx(360));
  CHECK(a.heatmap.at(4, 9).x_mw == doctest::Approx(200));

  const std::string csv = tau_csv(a.tau);
  CHECK(csv.find("4,evening,2,280,150,25,105,0.375") != std::string::npos);
}

TEST_CASE("analyze: a single record fills every table with its values") {
  const Analysis a = analyze(parse_records(row(7, 3, 22, 1000, 0.33, {10, 0, 5}, {{2, 5}})));
  CHECK(a.tau.groups.size() == 1);
  CHECK(a.tau.groups[0].x_mw == doctest::Approx(15));
  CHECK(a.nu.bins[3].x_mw == doctest::Approx(15));
  CHECK(a.heatmap.at(2, 9).x_mw == doctest::Approx(15));
  CHECK(a.area.mean_mw[0][static_cast<std::size_t>(EventKind::ufls)] == doctest::Approx(5));
}

TEST_CASE("analyze: empty input is an error") {
  CHECK_THROWS_AS(analyze(parse_records("")), ValidationError);
  CHECK_THROWS_AS(parse_records("{\"id\": 1}\n"), ParseError);
}
