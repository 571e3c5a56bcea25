#include "cascade/config.hpp"

#include "json_util.hpp"

namespace cascade {

using detail::json;

namespace {

const json& section(const json& doc, const char* key) {
  static const json empty = json::object();
  auto it = doc.find(key);
  if (it == doc.end()) return empty;
  if (!it->is_object()) throw ParseError(std::string("config.") + key + ": expected an object");
  return *it;
}

std::vector<int> int_list(const json& obj, const char* key, const std::string& where, std::vector<int> fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if (!it->is_array()) throw ParseError(where + "." + key + ": expected an array of integers");
  std::vector<int> out;
  for (const json& v : *it) {
    if (!v.is_number_integer()) throw ParseError(where + "." + key + ": expected an array of integers");
    out.push_back(v.get<int>());
  }
  return out;
}

std::uint64_t count(const json& obj, const char* key, const std::string& where, std::uint64_t fallback) {
  const long long v = detail::get_integer(obj, key, where, static_cast<long long>(fallback));
  if (v < 0) throw ValidationError(where + "." + key + ": must be non-negative");
  return static_cast<std::uint64_t>(v);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

CampaignConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  const json doc = detail::parse_json(text, "config");
  if (!doc.is_object()) throw ParseError("config: top level must be an object");
  if (doc.value("schema", std::string()) != kConfigSchema)
    throw ParseError("config.schema: expected \"" + std::string(kConfigSchema) + "\"");

  CampaignConfig cfg;
  auto it = doc.find("case");
  if (it == doc.end() || !it->is_string()) throw ParseError("config.case: missing case path");
  cfg.case_path = resolve(base_dir, it->get<std::string>());
  if (auto p = doc.find("protection"); p != doc.end() && !p->is_null()) {
    if (!p->is_string()) throw ParseError("config.protection: expected a path or \"auto\"");
    if (p->get<std::string>() != "auto") cfg.protection_path = resolve(base_dir, p->get<std::string>());
  }
  if (auto o = doc.find("output"); o != doc.end()) {
    if (!o->is_string()) throw ParseError("config.output: expected a path");
    cfg.output_dir = resolve(base_dir, o->get<std::string>());
  }
  cfg.threads = static_cast<unsigned>(count(doc, "threads", "config", 0));

  const json& sim = section(doc, "simulation");
  SimulationOptions& so = cfg.simulation;
  so.dt = detail::get_number(sim, "dt_s", "config.simulation", so.dt);
  so.params.avr_gain = detail::get_number(sim, "avr_gain", "config.simulation", so.params.avr_gain);
  so.params.deadband = detail::get_number(sim, "deadband_pu", "config.simulation", so.params.deadband);
  so.params.divergence_limit =
      detail::get_number(sim, "divergence_limit_pu", "config.simulation", so.params.divergence_limit);

  const json& atk = section(doc, "attack");
  AttackBounds& a = cfg.attack;
  a.lambda0_max_mw = detail::get_number(atk, "lambda0_max_mw", "config.attack", a.lambda0_max_mw);
  a.t_max_s = static_cast<int>(detail::get_integer(atk, "t_max_s", "config.attack", a.t_max_s));
  a.c_min = detail::get_number(atk, "c_min", "config.attack", a.c_min);
  a.c_max = detail::get_number(atk, "c_max", "config.attack", a.c_max);
  a.scenarios = int_list(atk, "scenarios", "config.attack", a.scenarios);
  a.vulnerable_buses = int_list(atk, "vulnerable_buses", "config.attack", a.vulnerable_buses);
  so.horizon = a.t_max_s;

  const json& smp = section(doc, "sampler");
  SamplerConfig& s = cfg.sampler;
  const std::string w = "config.sampler";
  s.proposals = count(smp, "proposals", w, s.proposals);
  s.chains = static_cast<unsigned>(count(smp, "chains", w, s.chains));
  s.seed = count(smp, "seed", w, s.seed);
  s.lambda_scale_mw = detail::get_number(smp, "lambda_scale_mw", w, s.lambda_scale_mw);
  s.interval_scale_s = detail::get_number(smp, "interval_scale_s", w, s.interval_scale_s);
  s.gain_scale = detail::get_number(smp, "gain_scale", w, s.gain_scale);
  s.tau_resample = detail::get_number(smp, "tau_resample", w, s.tau_resample);
  s.halting_mean = detail::get_number(smp, "halting_mean", w, s.halting_mean);
  s.halting_cap = static_cast<int>(detail::get_integer(smp, "halting_cap", w, s.halting_cap));
  s.pilot_proposals = count(smp, "pilot_proposals", w, s.pilot_proposals);
  s.pilot_batch = count(smp, "pilot_batch", w, s.pilot_batch);
  s.pilot_target = detail::get_number(smp, "pilot_target", w, s.pilot_target);
  s.pilot_low = detail::get_number(smp, "pilot_low", w, s.pilot_low);
  s.pilot_high = detail::get_number(smp, "pilot_high", w, s.pilot_high);
  s.checkpoint_every = count(smp, "checkpoint_every", w, s.checkpoint_every);

  validate(cfg);
  return cfg;
}

CampaignConfig load_config(const std::filesystem::path& path) {
  return parse_config(detail::read_text(path), path.parent_path());
}

std::string serialize_config(const CampaignConfig& cfg) {
  json doc;
  doc["schema"] = kConfigSchema;
  doc["case"] = cfg.case_path.string();
  doc["protection"] = cfg.protection_path.empty() ? std::string("auto") : cfg.protection_path.string();
  doc["output"] = cfg.output_dir.string();
  doc["threads"] = cfg.threads;
  const SimulationOptions& so = cfg.simulation;
  doc["simulation"] = {{"dt_s", so.dt},
                       {"avr_gain", so.params.avr_gain},
                       {"deadband_pu", so.params.deadband},
                       {"divergence_limit_pu", so.params.divergence_limit}};
  const AttackBounds& a = cfg.attack;
  doc["attack"] = {{"lambda0_max_mw", a.lambda0_max_mw}, {"t_max_s", a.t_max_s},   {"c_min", a.c_min},
                   {"c_max", a.c_max},                   {"scenarios", a.scenarios}, {"vulnerable_buses", a.vulnerable_buses}};
  const SamplerConfig& s = cfg.sampler;
  doc["sampler"] = {{"proposals", s.proposals},
                    {"chains", s.chains},
                    {"seed", s.seed},
                    {"lambda_scale_mw", s.lambda_scale_mw},
                    {"interval_scale_s", s.interval_scale_s},
                    {"gain_scale", s.gain_scale},
                    {"tau_resample", s.tau_resample},
                    {"halting_mean", s.halting_mean},
                    {"halting_cap", s.halting_cap},
                    {"pilot_proposals", s.pilot_proposals},
                    {"pilot_batch", s.pilot_batch},
                    {"pilot_target", s.pilot_target},
                    {"pilot_low", s.pilot_low},
                    {"pilot_high", s.pilot_high},
                    {"checkpoint_every", s.checkpoint_every}};
  return doc.dump(2) + "\n";
}

void validate(const CampaignConfig& cfg) {
  const AttackBounds& a = cfg.attack;
  if (!(a.lambda0_max_mw > 0)) throw ValidationError("config.attack.lambda0_max_mw must be positive");
  if (a.t_max_s < 1) throw ValidationError("config.attack.t_max_s must be at least 1");
  if (!(a.c_min > 0) || !(a.c_min <= a.c_max)) throw ValidationError("config.attack: need 0 < c_min <= c_max");
  if (a.scenarios.empty()) throw ValidationError("config.attack.scenarios: empty");
  for (int t : a.scenarios)
    if (t < 1 || t > 4) throw ValidationError("config.attack.scenarios: " + std::to_string(t) + " not in 1..4");
  const SamplerConfig& s = cfg.sampler;
  if (s.proposals < 1) throw ValidationError("config.sampler.proposals must be at least 1");
  if (s.chains < 1) throw ValidationError("config.sampler.chains must be at least 1");
  if (!(s.lambda_scale_mw > 0) || !(s.interval_scale_s > 0) || !(s.gain_scale >= 0))
    throw ValidationError("config.sampler: step scales must be positive");
  if (s.tau_resample < 0 || s.tau_resample > 1) throw ValidationError("config.sampler.tau_resample not in [0, 1]");
  if (!(s.halting_mean >= 1) || s.halting_cap < 1) throw ValidationError("config.sampler: bad halting parameters");
  if (s.pilot_proposals > 0 && s.pilot_batch < 1) throw ValidationError("config.sampler.pilot_batch must be positive");
  if (!(s.pilot_low <= s.pilot_target && s.pilot_target <= s.pilot_high))
    throw ValidationError("config.sampler: pilot target outside its band");
  if (s.checkpoint_every < 1) throw ValidationError("config.sampler.checkpoint_every must be positive");
  if (!(cfg.simulation.dt > 0)) throw ValidationError("config.simulation.dt_s must be positive");
  if (!(cfg.simulation.params.avr_gain >= 0)) throw ValidationError("config.simulation.avr_gain must be >= 0");
}

}  // namespace cascade
