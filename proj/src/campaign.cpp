#include "cascade/campaign.hpp"

#include "cascade/n1.hpp"
#include "json_util.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace cascade {

using detail::json;
namespace fs = std::filesystem;

AttackVector parse_attack(std::string_view text, const GridCase& grid) {
  const json doc = detail::parse_json(text, "attack");
  if (!doc.is_object()) throw ParseError("attack: top level must be an object");
  const std::string where = "attack";
  AttackVector a;
  a.scenario = static_cast<int>(detail::get_integer(doc, "scenario", where, 2));
  a.interval_s = static_cast<int>(detail::get_integer(doc, "interval_s", where, 60));
  a.gain = detail::get_number(doc, "gain", where, 0.0);
  auto it = doc.find("lambda0_mw");
  if (it == doc.end() || !it->is_array()) throw ParseError("attack.lambda0_mw: expected an array");
  std::vector<double> mw;
  for (std::size_t k = 0; k < it->size(); ++k) {
    const std::string at = "attack.lambda0_mw[" + std::to_string(k) + "]";
    const json& e = (*it)[k];
    if (!e.is_object()) throw ParseError(at + ": expected {bus, mw}");
    const Index i = grid.bus_index(static_cast<int>(detail::get_integer(e, "bus", at)));
    if (!grid.buses[static_cast<std::size_t>(i)].has_load()) throw ValidationError(at + ": bus carries no load");
    a.nodes.push_back(i);
    mw.push_back(detail::get_number(e, "mw", at));
  }
  a.initial_mw = Eigen::Map<const Vector>(mw.data(), static_cast<Index>(mw.size()));
  if (a.scenario < 1 || a.scenario > 4) throw ValidationError("attack.scenario must be in 1..4");
  if (a.interval_s < 1) throw ValidationError("attack.interval_s must be at least 1");
  if ((a.initial_mw.array() < 0).any()) throw ValidationError("attack.lambda0_mw: entries must be >= 0");
  return a;
}

std::string serialize_attack(const AttackVector& a, const GridCase& grid) {
  json doc;
  doc["scenario"] = a.scenario;
  doc["interval_s"] = a.interval_s;
  doc["gain"] = a.gain;
  json l = json::array();
  for (std::size_t k = 0; k < a.nodes.size(); ++k)
    l.push_back({{"bus", grid.buses[static_cast<std::size_t>(a.nodes[k])].id}, {"mw", a.initial_mw(static_cast<Index>(k))}});
  doc["lambda0_mw"] = l;
  return doc.dump(2) + "\n";
}

AttackVector CampaignModel::decode(const Vector& x) const {
  AttackVector a;
  a.nodes = nodes;
  a.initial_mw = x.head(static_cast<Index>(nodes.size()));
  const long interval = std::lround(x(interval_coord()));
  a.interval_s = static_cast<int>(std::clamp<long>(interval, 1, bounds.t_max_s));
  a.gain = x(gain_coord());
  a.scenario = static_cast<int>(std::lround(x(tau_coord())));
  return a;
}

Vector CampaignModel::encode(const AttackVector& a) const {
  Vector x(dimension());
  x.head(static_cast<Index>(nodes.size())) = a.initial_mw;
  x(interval_coord()) = a.interval_s;
  x(gain_coord()) = a.gain;
  x(tau_coord()) = a.scenario;
  return x;
}

bool CampaignModel::in_box(const Vector& x) const {
  const Index n = static_cast<Index>(nodes.size());
  if ((x.head(n).array() < 0).any() || (x.head(n).array() > bounds.lambda0_max_mw).any()) return false;
  if (x(interval_coord()) < 0.5 || x(interval_coord()) > bounds.t_max_s + 0.5) return false;
  if (x(gain_coord()) < bounds.c_min || x(gain_coord()) > bounds.c_max) return false;
  const int tau = static_cast<int>(std::lround(x(tau_coord())));
  return std::find(bounds.scenarios.begin(), bounds.scenarios.end(), tau) != bounds.scenarios.end();
}

CampaignModel make_campaign_model(GridCase base, const ProtectionConfig& protection, const CampaignConfig& cfg) {
  CampaignModel m;
  validate(protection, base);
  m.protection = protection;
  m.bounds = cfg.attack;
  m.simulation = cfg.simulation;
  m.simulation.horizon = cfg.attack.t_max_s;
  m.simulation.output_stride = 0;
  m.simulation.protection = true;
  m.simulation.stop_on_first_event = false;
  if (cfg.attack.vulnerable_buses.empty()) {
    m.nodes = base.load_buses();
  } else {
    for (int id : cfg.attack.vulnerable_buses) {
      const Index i = base.bus_index(id);
      if (!base.buses[static_cast<std::size_t>(i)].has_load())
        throw ValidationError("config.attack.vulnerable_buses: bus " + std::to_string(id) + " carries no load");
      m.nodes.push_back(i);
    }
  }
  for (int tau = 1; tau <= 4; ++tau) m.points.push_back(make_operating_point(base, tau));
  m.base = std::move(base);
  return m;
}

OracleResult condition_oracle(const CampaignModel& model, const AttackVector& attack) {
  OracleResult r;
  try {
    r.record = integrate(model.point(attack.scenario), &attack, model.protection, model.simulation);
    r.in_set = !r.record.events.empty();
  } catch (const Error& e) {
    r.failed = true;
    r.error = e.what();
  }
  return r;
}

SampleSummary summarize(const CampaignModel& model, const AttackVector& attack, const SimRecord& record) {
  SampleSummary s;
  s.attack = attack;
  const GridCase& grid = model.point(attack.scenario).grid;
  s.cascade = cascade_size(record.events, grid);
  if (record.schedule && record.schedule->epoch_count() > 0) s.attack_metrics = attack_metrics(*record.schedule, grid);
  s.diverged = record.diverged;
  if (!record.events.empty()) {
    s.first_kind = std::string(to_string(record.events.events.front().kind));
    s.first_time = record.events.events.front().time;
  }
  return s;
}

bool CampaignTarget::contains(const Vector& x) {
  if (!model_.in_box(x)) {
    last_.reset();
    return false;
  }
  const AttackVector a = model_.decode(x);
  OracleResult r = condition_oracle(model_, a);
  if (r.failed) {
    ++failures_;
    last_.reset();
    return false;
  }
  last_ = std::make_shared<SampleSummary>(summarize(model_, a, r.record));
  return r.in_set;
}

AttackVector find_witness(const CampaignModel& model) {
  std::vector<int> taus = model.bounds.scenarios;
  std::sort(taus.begin(), taus.end(), [](int a, int b) { return scenario_factor(a) > scenario_factor(b); });
  for (double frac : {1.0, 0.5, 0.25}) {
    for (int tau : taus) {
      AttackVector a;
      a.nodes = model.nodes;
      a.initial_mw = Vector::Constant(static_cast<Index>(model.nodes.size()), frac * model.bounds.lambda0_max_mw);
      a.interval_s = 1;
      a.gain = model.bounds.c_max;
      a.scenario = tau;
      if (condition_oracle(model, a).in_set) return a;
    }
  }
  throw ValidationError("no attack in the coarse witness grid fires a relay; nothing to sample");
}

SkipKernel make_kernel(const CampaignModel& model, const SamplerConfig& s, double multiplier) {
  const Index n = static_cast<Index>(model.nodes.size());
  const Index d = model.dimension();
  SkipKernel k;
  k.scale = Vector::Zero(d);
  k.scale.head(n).setConstant(s.lambda_scale_mw * multiplier);
  k.scale(model.interval_coord()) = s.interval_scale_s * multiplier;
  k.scale(model.gain_coord()) = s.gain_scale * multiplier;
  const double inf = std::numeric_limits<double>::infinity();
  k.lower = Vector::Zero(d);
  k.upper = Vector::Constant(d, model.bounds.lambda0_max_mw);
  k.lower(model.interval_coord()) = 0.5;
  k.upper(model.interval_coord()) = model.bounds.t_max_s + 0.5;
  k.lower(model.gain_coord()) = model.bounds.c_min;
  k.upper(model.gain_coord()) = model.bounds.c_max;
  k.lower(model.tau_coord()) = -inf;
  k.upper(model.tau_coord()) = inf;
  k.halting_mean = s.halting_mean;
  k.halting_cap = s.halting_cap;
  const Index tc = model.tau_coord();
  const double p = s.tau_resample;
  const std::vector<int> taus = model.bounds.scenarios;
  k.jump = [tc, p, taus](Vector& z, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < p) {
      std::uniform_int_distribution<std::size_t> pick(0, taus.size() - 1);
      z(tc) = taus[pick(rng)];
    }
  };
  return k;
}

std::string lambda_digest(const Vector& lambda) {
  std::uint64_t h = 1469598103934665603ULL;
  for (Index i = 0; i < lambda.size(); ++i) {
    unsigned char bytes[sizeof(double)];
    const double v = lambda(i);
    std::memcpy(bytes, &v, sizeof v);
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ProtectionConfig campaign_protection(const CampaignConfig& cfg, const GridCase& base, double* factor) {
  if (!cfg.protection_path.empty()) {
    ProtectionConfig p = parse_protection(detail::read_text(cfg.protection_path), base);
    if (factor) *factor = p.calibration_factor;
    return p;
  }
  N1Options o;
  o.simulation = cfg.simulation;
  o.simulation.horizon = cfg.attack.t_max_s;
  o.threads = cfg.threads;
  CalibrationResult r = calibrate(base, default_protection(base), kAllScenarios, o);
  if (!r.report.passed()) throw NumericalError("calibration did not reach an N-1 secure configuration");
  r.config.calibration_factor = r.factor;
  if (factor) *factor = r.factor;
  return r.config;
}

namespace {

struct Row {
  std::uint64_t proposal = 0;
  bool accepted = false;
  bool unique = false;
  std::shared_ptr<const SampleSummary> state;
};

struct Chain {
  ChainState state;
  std::uint64_t seed = 0;
  std::shared_ptr<const SampleSummary> current;
  std::uint64_t state_id = 0;
  bool state_written = false;
  std::uint64_t done = 0;  ///< main-run proposals completed
  std::uint64_t failures = 0;
  std::vector<Row> buffer;
};

std::vector<int> area_ids(const GridCase& grid) {
  std::vector<int> a;
  for (const Bus& b : grid.buses)
    if (std::find(a.begin(), a.end(), b.area) == a.end()) a.push_back(b.area);
  std::sort(a.begin(), a.end());
  return a;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

class Sink {
public:
  Sink(const fs::path& dir, const CampaignModel& model) : dir_(dir), model_(model), areas_(area_ids(model.base)) {}

  void open(bool append, std::uint64_t records_bytes, std::uint64_t lambda_bytes, std::uint64_t csv_bytes) {
    if (append) {
      fs::resize_file(dir_ / "records.jsonl", records_bytes);
      fs::resize_file(dir_ / "lambda0.jsonl", lambda_bytes);
      fs::resize_file(dir_ / "records.csv", csv_bytes);
    }
    const auto mode = std::ios::binary | (append ? std::ios::app : std::ios::trunc);
    records_.open(dir_ / "records.jsonl", mode);
    lambda_.open(dir_ / "lambda0.jsonl", mode);
    csv_.open(dir_ / "records.csv", mode);
    if (!records_ || !lambda_ || !csv_) throw IoError("cannot open record files in " + dir_.string());
    if (!append) csv_ << csv_header();
  }

  void write(std::uint64_t id, unsigned chain, std::uint64_t seed, const Row& row, std::uint64_t state_id) {
    const SampleSummary& s = *row.state;
    const std::string digest = lambda_digest(s.attack.initial_mw);
    json r;
    r["id"] = id;
    r["chain"] = chain;
    r["proposal"] = row.proposal;
    r["accepted"] = row.accepted;
    r["unique"] = row.unique;
    r["state"] = state_id;
    r["seed"] = seed;
    r["attack"] = {{"lambda0_digest", digest},
                   {"lambda0_total_mw", s.attack.initial_mw.sum()},
                   {"interval_s", s.attack.interval_s},
                   {"scenario", s.attack.scenario},
                   {"gain", s.attack.gain}};
    json metrics;
    metrics["x_mw"] = s.cascade.total_mw;
    for (EventKind k : kAllEventKinds)
      metrics["x_by_kind_mw"][std::string(to_string(k))] = s.cascade.mw_by_kind[static_cast<std::size_t>(k)];
    for (const auto& [area, mw] : s.cascade.area_mw)
      for (EventKind k : kAllEventKinds)
        metrics["x_area_mw"][std::to_string(area)][std::string(to_string(k))] = mw[static_cast<std::size_t>(k)];
    const Vector& sigma = s.attack_metrics.cumulative_mw;
    metrics["sigma_mw"] = std::vector<double>(sigma.begin(), sigma.end());
    metrics["mu_mw"] = s.attack_metrics.average_change_mw;
    metrics["nu"] = s.attack_metrics.vulnerability;
    r["metrics"] = metrics;
    json ev;
    for (EventKind k : kAllEventKinds)
      ev["count"][std::string(to_string(k))] = s.cascade.counts[static_cast<std::size_t>(k)];
    ev["first_kind"] = s.first_kind;
    ev["first_time_s"] = s.first_time;
    ev["diverged"] = s.diverged;
    r["events"] = ev;
    records_ << r.dump() << '\n';

    if (row.unique) {
      json l;
      l["id"] = id;
      l["digest"] = digest;
      json nodes = json::array();
      for (Index i : s.attack.nodes) nodes.push_back(model_.base.buses[static_cast<std::size_t>(i)].id);
      l["buses"] = nodes;
      l["lambda0_mw"] = std::vector<double>(s.attack.initial_mw.begin(), s.attack.initial_mw.end());
      lambda_ << l.dump() << '\n';
    }

    std::ostringstream c;
    c << std::setprecision(17);
    c << id << ',' << chain << ',' << row.proposal << ',' << int(row.accepted) << ',' << int(row.unique) << ','
      << state_id << ',' << s.attack.scenario << ',' << s.attack.interval_s << ',' << s.attack.gain << ','
      << s.attack.initial_mw.sum() << ',' << s.attack_metrics.average_change_mw << ','
      << s.attack_metrics.vulnerability << ',' << s.cascade.total_mw;
    for (EventKind k : kAllEventKinds) c << ',' << s.cascade.mw_by_kind[static_cast<std::size_t>(k)];
    for (EventKind k : kAllEventKinds) c << ',' << s.cascade.counts[static_cast<std::size_t>(k)];
    c << ',' << s.first_kind << ',' << s.first_time << ',' << int(s.diverged);
    for (int area : areas_) {
      auto it = s.cascade.area_mw.find(area);
      for (EventKind k : kAllEventKinds) c << ',' << (it == s.cascade.area_mw.end() ? 0.0 : it->second[static_cast<std::size_t>(k)]);
    }
    csv_ << c.str() << '\n';
  }

  void flush() {
    records_.flush();
    lambda_.flush();
    csv_.flush();
    if (!records_ || !lambda_ || !csv_) throw IoError("write failed in " + dir_.string());
  }

  std::uint64_t records_bytes() const { return fs::file_size(dir_ / "records.jsonl"); }
  std::uint64_t lambda_bytes() const { return fs::file_size(dir_ / "lambda0.jsonl"); }
  std::uint64_t csv_bytes() const { return fs::file_size(dir_ / "records.csv"); }

private:
  std::string csv_header() const {
    std::string h =
        "id,chain,proposal,accepted,unique,state,scenario,interval_s,gain,lambda0_total_mw,mu_mw,nu,x_mw";
    for (EventKind k : kAllEventKinds) h += ",x_" + lower(to_string(k)) + "_mw";
    for (EventKind k : kAllEventKinds) h += ",n_" + lower(to_string(k));
    h += ",first_kind,first_time_s,diverged";
    for (int area : areas_)
      for (EventKind k : kAllEventKinds) h += ",x_area" + std::to_string(area) + "_" + lower(to_string(k)) + "_mw";
    return h + "\n";
  }

  fs::path dir_;
  const CampaignModel& model_;
  std::vector<int> areas_;
  std::ofstream records_, lambda_, csv_;
};

/// The parts of the configuration a checkpoint must agree with. The
/// proposal count may grow and the thread count may change on resume.
json resumable_config(const CampaignConfig& cfg) {
  json j = json::parse(serialize_config(cfg));
  j["sampler"].erase("proposals");
  j.erase("threads");
  return j;
}

std::string rng_text(const Rng& rng) {
  std::ostringstream o;
  o << rng;
  return o.str();
}

void rng_restore(Rng& rng, const std::string& text) {
  std::istringstream i(text);
  i >> rng;
  if (!i) throw ParseError("checkpoint: bad generator state");
}

json stats_json(const ChainStats& s) {
  return {{"proposals", s.proposals}, {"accepts", s.accepts}, {"oracle_calls", s.oracle_calls}, {"skips", s.skips}};
}

ChainStats stats_from(const json& j) {
  ChainStats s;
  s.proposals = j.at("proposals").get<std::uint64_t>();
  s.accepts = j.at("accepts").get<std::uint64_t>();
  s.oracle_calls = j.at("oracle_calls").get<std::uint64_t>();
  s.skips = j.at("skips").get<std::vector<std::uint64_t>>();
  return s;
}

/// Proposals global index g goes to chain g % chains.
std::uint64_t share(std::uint64_t begin, std::uint64_t end, unsigned chain, unsigned chains) {
  auto upto = [&](std::uint64_t n) { return n / chains + (chain < n % chains ? 1 : 0); };
  return upto(end) - upto(begin);
}

/// Run `counts[c]` proposals on chain c, one thread per chain. Rows are
/// buffered only when `record` is set.
void advance(std::vector<Chain>& chains, std::vector<CampaignTarget>& targets,
             std::vector<SkippingSampler<CampaignTarget>>& samplers, const std::vector<std::uint64_t>& counts,
             bool record, unsigned threads) {
  parallel_for(chains.size(), threads, [&](std::size_t c) {
    Chain& ch = chains[c];
    for (std::uint64_t k = 0; k < counts[c]; ++k) {
      const StepResult r = samplers[c].step(ch.state);
      if (r.accepted) ch.current = targets[c].last();
      if (!record) continue;
      ++ch.done;
      if (ch.state.pi > 0 && ch.current) {
        Row row;
        row.proposal = ch.done - 1;
        row.accepted = r.accepted;
        row.unique = r.accepted || !ch.state_written;
        row.state = ch.current;
        ch.buffer.push_back(std::move(row));
        ch.state_written = true;
      }
    }
    ch.failures = targets[c].failures();
  });
}

}  // namespace

CampaignSummary run_campaign(const CampaignConfig& cfg, const CampaignOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  validate(cfg);
  const fs::path dir = cfg.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const fs::path ckpt_path = dir / "checkpoint.json";
  const bool resuming = options.resume && fs::exists(ckpt_path);

  GridCase base = load_case(cfg.case_path);
  double factor = 1;
  ProtectionConfig protection;
  if (resuming) {
    protection = parse_protection(detail::read_text(dir / "protection.json"), base);
    factor = protection.calibration_factor;
  } else {
    protection = campaign_protection(cfg, base, &factor);
    detail::write_text(dir / "protection.json", serialize_protection(protection, base));
  }
  const CampaignModel model = make_campaign_model(std::move(base), protection, cfg);
  const SamplerConfig& sc = cfg.sampler;
  const unsigned nchains = sc.chains;

  std::vector<CampaignTarget> targets;
  for (unsigned c = 0; c < nchains; ++c) targets.emplace_back(model);
  std::vector<Chain> chains(nchains);
  CampaignSummary summary;
  summary.calibration_factor = factor;

  double multiplier = 1;
  std::uint64_t next_id = 0;
  std::uint64_t done = 0;
  Sink sink(dir, model);
  auto log = [&](const std::string& msg) {
    if (!options.quiet) std::cerr << msg << '\n';
  };

  if (resuming) {
    const json ck = detail::parse_json(detail::read_text(ckpt_path), "checkpoint");
    if (ck.at("config") != resumable_config(cfg))
      throw ValidationError("checkpoint was written by a different configuration");
    multiplier = ck.at("scale_multiplier").get<double>();
    summary.pilot_acceptance = ck.at("pilot_acceptance").get<double>();
    next_id = ck.at("next_id").get<std::uint64_t>();
    done = ck.at("done").get<std::uint64_t>();
    const json& jc = ck.at("chains");
    if (jc.size() != nchains) throw ValidationError("checkpoint chain count does not match the configuration");
    for (unsigned c = 0; c < nchains; ++c) {
      const json& j = jc[c];
      Chain& ch = chains[c];
      ch.seed = j.at("seed").get<std::uint64_t>();
      const auto p = j.at("point").get<std::vector<double>>();
      ch.state.point = Eigen::Map<const Vector>(p.data(), static_cast<Index>(p.size()));
      ch.state.pi = j.at("pi").get<double>();
      rng_restore(ch.state.rng, j.at("rng").get<std::string>());
      ch.state.stats = stats_from(j.at("stats"));
      ch.state_id = j.at("state_id").get<std::uint64_t>();
      ch.state_written = j.at("state_written").get<bool>();
      ch.done = j.at("done").get<std::uint64_t>();
      // The summary of the current state is recomputed; the oracle is deterministic.
      const AttackVector a = model.decode(ch.state.point);
      OracleResult r = condition_oracle(model, a);
      if (!r.failed) ch.current = std::make_shared<SampleSummary>(summarize(model, a, r.record));
    }
    sink.open(true, ck.at("records_bytes").get<std::uint64_t>(), ck.at("lambda_bytes").get<std::uint64_t>(),
              ck.at("csv_bytes").get<std::uint64_t>());
    log("resuming at proposal " + std::to_string(done));
  } else {
    const AttackVector witness = find_witness(model);
    const Vector start = model.encode(witness);
    std::uint64_t seq = sc.seed;
    for (unsigned c = 0; c < nchains; ++c) {
      chains[c].seed = splitmix64(seq);
      SkippingSampler<CampaignTarget> s(targets[c], make_kernel(model, sc, 1.0));
      chains[c].state = s.start(start, chains[c].seed);
      chains[c].current = targets[c].last();
    }
    // Pilot: retune a common step multiplier every batch, then freeze it.
    std::uint64_t pilot_props = 0, pilot_acc = 0;
    for (std::uint64_t begin = 0; begin < sc.pilot_proposals; begin += sc.pilot_batch) {
      const std::uint64_t end = std::min(sc.pilot_proposals, begin + sc.pilot_batch);
      std::vector<SkippingSampler<CampaignTarget>> samplers;
      for (unsigned c = 0; c < nchains; ++c) samplers.emplace_back(targets[c], make_kernel(model, sc, multiplier));
      std::vector<std::uint64_t> counts(nchains);
      std::uint64_t before_acc = 0;
      for (unsigned c = 0; c < nchains; ++c) {
        counts[c] = share(begin, end, c, nchains);
        before_acc += chains[c].state.stats.accepts;
      }
      advance(chains, targets, samplers, counts, false, cfg.threads);
      std::uint64_t after_acc = 0;
      for (const Chain& ch : chains) after_acc += ch.state.stats.accepts;
      const double rate = static_cast<double>(after_acc - before_acc) / static_cast<double>(end - begin);
      pilot_props += end - begin;
      pilot_acc += after_acc - before_acc;
      multiplier = std::clamp(multiplier * retune_factor(rate, sc.pilot_target), 1e-3, 20.0);
      log("pilot " + std::to_string(end) + ": acceptance " + std::to_string(rate) + ", multiplier " +
          std::to_string(multiplier));
    }
    summary.pilot_acceptance = pilot_props ? static_cast<double>(pilot_acc) / static_cast<double>(pilot_props) : 0;
    for (Chain& ch : chains) {
      ch.state.stats = ChainStats{};
      ch.state.stats.skips.assign(static_cast<std::size_t>(sc.halting_cap), 0);
    }
    sink.open(false, 0, 0, 0);
  }

  std::vector<SkippingSampler<CampaignTarget>> samplers;
  for (unsigned c = 0; c < nchains; ++c) samplers.emplace_back(targets[c], make_kernel(model, sc, multiplier));

  auto checkpoint = [&] {
    json ck;
    ck["config"] = resumable_config(cfg);
    ck["scale_multiplier"] = multiplier;
    ck["pilot_acceptance"] = summary.pilot_acceptance;
    ck["next_id"] = next_id;
    ck["done"] = done;
    ck["records_bytes"] = sink.records_bytes();
    ck["lambda_bytes"] = sink.lambda_bytes();
    ck["csv_bytes"] = sink.csv_bytes();
    json jc = json::array();
    for (const Chain& ch : chains)
      jc.push_back({{"seed", ch.seed},
                    {"point", std::vector<double>(ch.state.point.begin(), ch.state.point.end())},
                    {"pi", ch.state.pi},
                    {"rng", rng_text(ch.state.rng)},
                    {"stats", stats_json(ch.state.stats)},
                    {"state_id", ch.state_id},
                    {"state_written", ch.state_written},
                    {"done", ch.done}});
    ck["chains"] = jc;
    const fs::path tmp = dir / "checkpoint.json.tmp";
    detail::write_text(tmp, ck.dump(1) + "\n");
    fs::rename(tmp, ckpt_path);
  };

  if (!resuming) {
    sink.flush();
    checkpoint();
  }
  while (done < sc.proposals) {
    const std::uint64_t end = std::min(sc.proposals, done + sc.checkpoint_every);
    std::vector<std::uint64_t> counts(nchains);
    for (unsigned c = 0; c < nchains; ++c) counts[c] = share(done, end, c, nchains);
    advance(chains, targets, samplers, counts, true, cfg.threads);
    for (unsigned c = 0; c < nchains; ++c) {
      Chain& ch = chains[c];
      for (const Row& row : ch.buffer) {
        if (row.unique) ch.state_id = next_id;
        sink.write(next_id, c, ch.seed, row, ch.state_id);
        ++next_id;
      }
      ch.buffer.clear();
    }
    done = end;
    sink.flush();
    checkpoint();
    log("proposals " + std::to_string(done) + "/" + std::to_string(sc.proposals));
  }

  ChainStats total;
  total.skips.assign(static_cast<std::size_t>(sc.halting_cap), 0);
  for (unsigned c = 0; c < nchains; ++c) {
    const ChainStats& s = chains[c].state.stats;
    total.proposals += s.proposals;
    total.accepts += s.accepts;
    total.oracle_calls += s.oracle_calls;
    for (std::size_t k = 0; k < s.skips.size() && k < total.skips.size(); ++k) total.skips[k] += s.skips[k];
    summary.oracle_failures += targets[c].failures();
  }
  summary.proposals = total.proposals;
  summary.accepts = total.accepts;
  summary.acceptance_rate = total.acceptance_rate();
  summary.oracle_calls = total.oracle_calls;
  summary.skips = total.skips;
  summary.scale_multiplier = multiplier;
  summary.records = next_id;
  summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // Unique count and per-kind totals come from the record file so that a
  // resumed run reports the same numbers as an uninterrupted one.
  std::array<double, kEventKinds> mw{};
  std::array<std::uint64_t, kEventKinds> n{};
  {
    std::ifstream in(dir / "records.jsonl");
    std::string line;
    while (std::getline(in, line)) {
      const json r = json::parse(line);
      if (r.at("unique").get<bool>()) ++summary.unique;
      for (EventKind k : kAllEventKinds) {
        const std::string key(to_string(k));
        mw[static_cast<std::size_t>(k)] += r["metrics"]["x_by_kind_mw"][key].get<double>();
        n[static_cast<std::size_t>(k)] += r["events"]["count"][key].get<std::uint64_t>();
      }
    }
  }

  json js;
  js["proposals"] = summary.proposals;
  js["accepts"] = summary.accepts;
  js["acceptance_rate"] = summary.acceptance_rate;
  js["records"] = summary.records;
  js["unique_states"] = summary.unique;
  js["oracle_calls"] = summary.oracle_calls;
  js["oracle_failures"] = summary.oracle_failures;
  js["skip_histogram"] = summary.skips;
  js["chains"] = nchains;
  js["pilot"] = {{"proposals", sc.pilot_proposals},
                 {"acceptance_rate", summary.pilot_acceptance},
                 {"scale_multiplier", multiplier}};
  js["calibration_factor"] = factor;
  for (EventKind k : kAllEventKinds) {
    js["events"][std::string(to_string(k))] = {{"mw", mw[static_cast<std::size_t>(k)]},
                                               {"count", n[static_cast<std::size_t>(k)]}};
  }
  js["wall_seconds"] = summary.wall_seconds;
  detail::write_text(dir / "summary.json", js.dump(2) + "\n");
  return summary;
}

}  // namespace cascade
