#include "cascade/analysis.hpp"
#include "cascade/campaign.hpp"
#include "cascade/config.hpp"
#include "cascade/n1.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace cascade;

namespace {

enum Exit { ok = 0, n1_failed = 1, validation = 2, numerical = 3, io = 4 };

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f || !(f << text)) throw IoError("cannot write " + out);
}

/// Common inputs: the case from --case or the config, dynamics from the config.
struct Inputs {
  std::string case_path, config_path, protection_path;
  unsigned threads = 0;

  std::optional<CampaignConfig> config() const {
    if (config_path.empty()) return std::nullopt;
    return load_config(config_path);
  }
  GridCase grid(const std::optional<CampaignConfig>& cfg) const {
    if (!case_path.empty()) return load_case(case_path);
    if (cfg) return load_case(cfg->case_path);
    throw ValidationError("no case given: use --case or --config");
  }
  SimulationOptions simulation(const std::optional<CampaignConfig>& cfg) const {
    SimulationOptions s = cfg ? cfg->simulation : SimulationOptions{};
    s.output_stride = 0;
    return s;
  }
  ProtectionConfig protection(const std::optional<CampaignConfig>& cfg, const GridCase& grid) const {
    if (!protection_path.empty()) return parse_protection(slurp(protection_path), grid);
    if (cfg && !cfg->protection_path.empty()) return parse_protection(slurp(cfg->protection_path), grid);
    throw ValidationError("no protection thresholds given: use --protection, a config with a protection file, "
                          "or run `calibrate` first");
  }
};

void add_inputs(CLI::App* app, Inputs& in, bool protection) {
  app->add_option("--case", in.case_path, "Case file (cascade-laa-case/1)");
  app->add_option("--config", in.config_path, "Config file (cascade-laa-config/1)");
  if (protection) app->add_option("--protection", in.protection_path, "Protection file (cascade-laa-protection/1)");
  app->add_option("--threads", in.threads, "Worker threads, 0 for all cores");
}

void print_report(const N1Report& r, std::ostream& os) {
  os << "simulations: " << r.simulations << "\n";
  os << "worst ratios: rocof " << r.worst.rocof << ", ofgs " << r.worst.ofgs << ", ufls " << r.worst.ufls
     << ", line " << r.worst.line << "\n";
  for (const N1Failure& f : r.failures) {
    os << "FAIL tau " << f.scenario << " " << f.description << ":";
    for (EventKind k : kAllEventKinds)
      if (auto n = f.events.count(k)) os << " " << to_string(k) << " x" << n;
    os << "\n";
  }
  os << (r.passed() ? "N-1 secure\n" : "N-1 violated\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cascading-failure simulator and rare-event sampler for load-altering attacks"};
  app.require_subcommand(1);

  Inputs sim_in;
  std::string attack_path, sim_out;
  double stride = 0;
  bool no_protection = false;
  auto* sim = app.add_subcommand("simulate", "Simulate one attack vector and print the record as JSON");
  add_inputs(sim, sim_in, true);
  sim->add_option("--attack", attack_path, "Attack file")->required();
  sim->add_option("--out", sim_out, "Output file (default stdout)");
  sim->add_option("--stride", stride, "Trajectory sample spacing in seconds, 0 for none");
  sim->add_flag("--no-protection", no_protection, "Monitor relays without tripping");

  Inputs cal_in;
  std::string cal_out;
  auto* cal = app.add_subcommand("calibrate", "Scale default thresholds until N-1 secure; write the result");
  add_inputs(cal, cal_in, false);
  cal->add_option("--out", cal_out, "Protection file to write (default stdout)");

  Inputs n1_in;
  auto* n1 = app.add_subcommand("verify-n1", "Check every single outage under all four scenarios");
  add_inputs(n1, n1_in, true);

  std::string camp_config, camp_case, camp_out;
  std::optional<std::uint64_t> seed, proposals;
  std::optional<unsigned> chains, camp_threads;
  bool resume = false, verbose = false;
  auto* camp = app.add_subcommand("campaign", "Run the sampler campaign");
  camp->add_option("--config", camp_config, "Config file")->required();
  camp->add_option("--case", camp_case, "Override the case file");
  camp->add_option("--seed", seed, "Master seed");
  camp->add_option("--proposals", proposals, "Total proposals over all chains");
  camp->add_option("--chains", chains, "Number of chains");
  camp->add_option("--threads", camp_threads, "Worker threads");
  camp->add_option("--out", camp_out, "Output directory");
  camp->add_flag("--resume", resume, "Continue from the checkpoint in the output directory");
  camp->add_flag("-v,--verbose", verbose, "Progress on stderr");

  std::string an_in, an_out;
  auto* an = app.add_subcommand("analyze", "Aggregate a record file into area/nu/heatmap/tau tables");
  an->add_option("--in", an_in, "records.jsonl or a campaign output directory")->required();
  an->add_option("--out", an_out, "Directory for the CSV tables (default: next to the records)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? Exit::ok : Exit::validation;
  }

  try {
    if (*sim) {
      const auto cfg = sim_in.config();
      const GridCase grid = sim_in.grid(cfg);
      const AttackVector attack = parse_attack(slurp(attack_path), grid);
      SimulationOptions so = sim_in.simulation(cfg);
      if (cfg) so.horizon = cfg->attack.t_max_s;
      so.output_stride = stride;
      so.protection = !no_protection;
      const ProtectionConfig pc = sim_in.protection(cfg, grid);
      validate(pc, grid);
      const OperatingPoint op = make_operating_point(grid, attack.scenario);
      const SimRecord rec = integrate(op, &attack, pc, so);
      emit(sim_record_json(rec, op.grid), sim_out);
      return rec.diverged ? Exit::numerical : Exit::ok;
    }
    if (*cal) {
      const auto cfg = cal_in.config();
      const GridCase grid = cal_in.grid(cfg);
      N1Options o;
      o.simulation = cal_in.simulation(cfg);
      o.threads = cal_in.threads;
      CalibrationResult r = calibrate(grid, default_protection(grid), kAllScenarios, o);
      r.config.calibration_factor = r.factor;
      std::cerr << "untuned ratios: rocof " << r.untuned.rocof << ", ofgs " << r.untuned.ofgs << ", ufls "
                << r.untuned.ufls << ", line " << r.untuned.line << "\n";
      std::cerr << "calibration factor: " << r.factor << "\n";
      print_report(r.report, std::cerr);
      emit(serialize_protection(r.config, grid), cal_out);
      return r.report.passed() ? Exit::ok : Exit::n1_failed;
    }
    if (*n1) {
      const auto cfg = n1_in.config();
      const GridCase grid = n1_in.grid(cfg);
      N1Options o;
      o.simulation = n1_in.simulation(cfg);
      o.threads = n1_in.threads;
      o.stop_on_first_event = false;
      const N1Report r = verify_n1(grid, n1_in.protection(cfg, grid), kAllScenarios, o);
      print_report(r, std::cout);
      return r.passed() ? Exit::ok : Exit::n1_failed;
    }
    if (*camp) {
      CampaignConfig cfg = load_config(camp_config);
      if (!camp_case.empty()) cfg.case_path = camp_case;
      if (seed) cfg.sampler.seed = *seed;
      if (proposals) cfg.sampler.proposals = *proposals;
      if (chains) cfg.sampler.chains = *chains;
      if (camp_threads) cfg.threads = *camp_threads;
      if (!camp_out.empty()) cfg.output_dir = camp_out;
      validate(cfg);
      CampaignOptions opt;
      opt.resume = resume;
      opt.quiet = !verbose;
      const CampaignSummary s = run_campaign(cfg, opt);
      std::cout << "proposals " << s.proposals << ", accepted " << s.accepts << ", acceptance rate "
                << s.acceptance_rate << ", records " << s.records << " (" << s.unique << " unique), oracle calls "
                << s.oracle_calls << ", failures " << s.oracle_failures << ", " << s.wall_seconds << " s\n";
      return Exit::ok;
    }
    if (*an) {
      fs::path in = an_in;
      if (fs::is_directory(in)) in /= "records.jsonl";
      const fs::path out = an_out.empty() ? in.parent_path() : fs::path(an_out);
      const Analysis a = analyze(read_records(in));
      write_tables(a, out);
      std::cout << "wrote area.csv, nu.csv, heatmap.csv, tau.csv to " << (out.empty() ? "." : out.string()) << "\n";
      return Exit::ok;
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Exit::io;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Exit::numerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Exit::validation;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Exit::io;
  }
  return Exit::ok;
}
