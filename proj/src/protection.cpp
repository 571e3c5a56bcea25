#include "cascade/protection.hpp"

#include "cascade/swing.hpp"
#include "json_util.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace cascade {

using detail::json;

namespace {

constexpr double kNotPicked = std::numeric_limits<double>::quiet_NaN();

// Pickup timer: true once the condition has held for the configured delay.
bool picked_up(double& since, bool exceeding, double time, double delay) {
  if (!exceeding) {
    since = kNotPicked;
    return false;
  }
  if (std::isnan(since)) since = time;
  return time - since >= delay - 1e-9;
}

}  // namespace

ProtectionConfig ProtectionConfig::scaled(double factor) const {
  ProtectionConfig out = *this;
  out.rocof_limit *= factor;
  out.ofgs_limit *= factor;
  for (auto& t : out.ufls_thresholds) t *= factor;
  out.line_limits *= factor;
  out.calibration_factor *= factor;
  return out;
}

void validate(const ProtectionConfig& cfg, const GridCase& grid) {
  if (!(cfg.rocof_limit > 0)) throw ValidationError("protection: rocof_limit must be positive");
  if (!(cfg.ofgs_limit > 0)) throw ValidationError("protection: ofgs_limit must be positive");
  for (std::size_t k = 1; k < cfg.ufls_thresholds.size(); ++k)
    if (!(cfg.ufls_thresholds[k] < cfg.ufls_thresholds[k - 1]))
      throw ValidationError("protection: ufls_thresholds must be strictly decreasing");
  if (!(cfg.ufls_fraction > 0) || cfg.ufls_fraction * kUflsStages > 1.0)
    throw ValidationError("protection: ufls_fraction must lie in (0, 1/4]");
  if (!(cfg.trip_delay >= 0)) throw ValidationError("protection: trip_delay must be non-negative");
  if (!(cfg.rocof_window > 0)) throw ValidationError("protection: rocof_window must be positive");
  if (cfg.line_limits.size() != static_cast<Index>(grid.lines.size()))
    throw ValidationError("protection: need one line limit per line of the case");
  for (std::size_t k = 0; k < grid.lines.size(); ++k)
    if (grid.lines[k].is_interconnector && !(cfg.line_limits(static_cast<Index>(k)) > 0))
      throw ValidationError("protection: line " + grid.line_name(static_cast<Index>(k)) +
                            " is an interconnector and needs a positive limit");
}

std::string serialize_protection(const ProtectionConfig& cfg, const GridCase& grid) {
  json doc;
  doc["schema"] = kProtectionSchema;
  doc["rocof_limit_pu_per_s"] = cfg.rocof_limit;
  doc["ofgs_limit_pu"] = cfg.ofgs_limit;
  doc["ufls_thresholds_pu"] = cfg.ufls_thresholds;
  doc["ufls_fraction"] = cfg.ufls_fraction;
  doc["trip_delay_s"] = cfg.trip_delay;
  doc["rocof_window_s"] = cfg.rocof_window;
  doc["calibration_factor"] = cfg.calibration_factor;
  json lines = json::array();
  for (std::size_t k = 0; k < grid.lines.size(); ++k) {
    const Line& l = grid.lines[k];
    if (!l.is_interconnector) continue;
    lines.push_back({{"from", grid.buses[static_cast<std::size_t>(l.from)].id},
                     {"to", grid.buses[static_cast<std::size_t>(l.to)].id},
                     {"limit_mw", cfg.line_limits(static_cast<Index>(k)) * grid.base_mva}});
  }
  doc["line_limits"] = lines;
  return doc.dump(2) + "\n";
}

ProtectionConfig parse_protection(std::string_view text, const GridCase& grid) {
  const json doc = detail::parse_json(text, "protection");
  if (!doc.is_object()) throw ParseError("protection: top level must be an object");
  if (doc.value("schema", std::string()) != kProtectionSchema)
    throw ParseError("protection.schema: expected \"" + std::string(kProtectionSchema) + "\"");
  const std::string where = "protection";
  ProtectionConfig cfg;
  cfg.rocof_limit = detail::get_number(doc, "rocof_limit_pu_per_s", where, cfg.rocof_limit);
  cfg.ofgs_limit = detail::get_number(doc, "ofgs_limit_pu", where, cfg.ofgs_limit);
  cfg.ufls_fraction = detail::get_number(doc, "ufls_fraction", where, cfg.ufls_fraction);
  cfg.trip_delay = detail::get_number(doc, "trip_delay_s", where, cfg.trip_delay);
  cfg.rocof_window = detail::get_number(doc, "rocof_window_s", where, cfg.rocof_window);
  cfg.calibration_factor = detail::get_number(doc, "calibration_factor", where, 1.0);
  if (auto it = doc.find("ufls_thresholds_pu"); it != doc.end()) {
    if (!it->is_array() || it->size() != kUflsStages)
      throw ParseError("protection.ufls_thresholds_pu: expected an array of 4 numbers");
    for (std::size_t k = 0; k < kUflsStages; ++k) {
      if (!(*it)[k].is_number()) throw ParseError("protection.ufls_thresholds_pu: expected numbers");
      cfg.ufls_thresholds[k] = (*it)[k].get<double>();
    }
  }
  cfg.line_limits = Vector::Zero(static_cast<Index>(grid.lines.size()));
  std::vector<bool> seen(grid.lines.size(), false);
  const auto lines = doc.find("line_limits");
  if (lines != doc.end()) {
    if (!lines->is_array()) throw ParseError("protection.line_limits: expected an array");
    for (std::size_t k = 0; k < lines->size(); ++k) {
      const std::string at = "protection.line_limits[" + std::to_string(k) + "]";
      const json& j = (*lines)[k];
      if (!j.is_object()) throw ParseError(at + ": expected an object");
      const Index a = grid.bus_index(static_cast<int>(detail::get_integer(j, "from", at)));
      const Index b = grid.bus_index(static_cast<int>(detail::get_integer(j, "to", at)));
      const double limit = detail::get_number(j, "limit_mw", at) / grid.base_mva;
      bool matched = false;
      for (std::size_t m = 0; m < grid.lines.size() && !matched; ++m) {
        const Line& l = grid.lines[m];
        if (seen[m] || !((l.from == a && l.to == b) || (l.from == b && l.to == a))) continue;
        cfg.line_limits(static_cast<Index>(m)) = limit;
        seen[m] = matched = true;
      }
      if (!matched) throw ValidationError(at + ": no such line in the case");
    }
  }
  validate(cfg, grid);
  return cfg;
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::rigs: return "RIGS";
    case EventKind::ofgs: return "OFGS";
    case EventKind::ufls: return "UFLS";
    case EventKind::line: return "LINE";
  }
  return "?";
}

EventKind event_kind_from_string(std::string_view text) {
  for (auto k : kAllEventKinds)
    if (to_string(k) == text) return k;
  throw ParseError("unknown event kind \"" + std::string(text) + "\"");
}

std::size_t EventLog::count(EventKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [kind](const Event& e) { return e.kind == kind; }));
}

void EventLog::append(const EventLog& other) {
  events.insert(events.end(), other.events.begin(), other.events.end());
}

CascadeMetrics cascade_size(const EventLog& log, const GridCase& grid) {
  CascadeMetrics m;
  for (const Event& e : log.events) {
    const auto k = static_cast<std::size_t>(e.kind);
    ++m.counts[k];
    if (e.kind == EventKind::line) continue;
    m.total_mw += e.magnitude;
    m.mw_by_kind[k] += e.magnitude;
    const int area = grid.buses.at(static_cast<std::size_t>(e.target)).area;
    m.area_mw[area][k] += e.magnitude;
  }
  return m;
}

double PeakRatios::max() const { return std::max({rocof, ofgs, ufls, line}); }

RelayState::RelayState(const GridCase& grid, const ProtectionConfig& cfg, double dt)
    : window_(std::max<Eigen::Index>(1, std::llround(cfg.rocof_window / dt))),
      history_(Matrix::Zero(grid.size(), window_)),
      sum_(Vector::Zero(grid.size())),
      average_(Vector::Zero(grid.size())),
      peak_rocof_(Vector::Zero(grid.size())),
      rigs_since_(Vector::Constant(grid.generator_count(), kNotPicked)),
      ofgs_since_(Vector::Constant(grid.generator_count(), kNotPicked)),
      ufls_since_(Vector::Constant(grid.size(), kNotPicked)),
      line_since_(Vector::Constant(static_cast<Index>(grid.lines.size()), kNotPicked)) {}

const Vector& RelayState::filter_rocof(const Vector& instantaneous) {
  // The window starts filled with the equilibrium value 0.
  sum_ += instantaneous - history_.col(cursor_);
  history_.col(cursor_) = instantaneous;
  cursor_ = (cursor_ + 1) % window_;
  average_ = sum_ / static_cast<double>(window_);
  peak_rocof_ = peak_rocof_.cwiseMax(average_.cwiseAbs());
  return average_;
}

bool check_and_trip(const Eigen::Ref<const Vector>& angle, const Eigen::Ref<const Vector>& frequency,
                    const Eigen::Ref<const Vector>& voltage, const Eigen::Ref<const Vector>& governor,
                    double time, const GridCase& grid, const ProtectionConfig& cfg,
                    const Vector& equilibrium_load, IndicatorState& ind, Vector& net_load, EventLog& log,
                    RelayState& relay) {
  const double base = grid.base_mva;
  const Index gens = grid.generator_count();
  const bool live = !relay.monitor_only;
  PeakRatios& peaks = relay.peaks_;
  const Vector& rocof = relay.average_;
  bool changed = false;

  for (Index g = 0; g < gens; ++g) {
    if (!ind.generator_connected[static_cast<std::size_t>(g)]) continue;
    const double r = std::abs(rocof(g));
    peaks.rocof = std::max(peaks.rocof, r / cfg.rocof_limit);
    if (picked_up(relay.rigs_since_(g), r > cfg.rocof_limit, time, cfg.trip_delay) && live) {
      const Bus& b = grid.buses[static_cast<std::size_t>(g)];
      ind.generator_connected[static_cast<std::size_t>(g)] = 0;
      log.events.push_back({EventKind::rigs, time, g, std::min(b.p_max, b.p_gen + governor(g)) * base});
      changed = true;
    }
  }

  for (Index g = 0; g < gens; ++g) {
    if (!ind.generator_connected[static_cast<std::size_t>(g)]) continue;
    const double w = frequency(g);
    peaks.ofgs = std::max(peaks.ofgs, w / cfg.ofgs_limit);
    if (picked_up(relay.ofgs_since_(g), w > cfg.ofgs_limit, time, cfg.trip_delay) && live) {
      const Bus& b = grid.buses[static_cast<std::size_t>(g)];
      ind.generator_connected[static_cast<std::size_t>(g)] = 0;
      log.events.push_back({EventKind::ofgs, time, g, std::min(b.p_max, b.p_gen + governor(g)) * base});
      changed = true;
    }
  }

  for (Index i = 0; i < grid.size(); ++i) {
    if (!(equilibrium_load(i) > 0)) continue;
    int& stage = ind.ufls_stage[static_cast<std::size_t>(i)];
    if (stage >= kUflsStages) continue;
    const double w = frequency(i);
    peaks.ufls = std::max(peaks.ufls, w / cfg.ufls_thresholds[0]);
    const double threshold = cfg.ufls_thresholds[static_cast<std::size_t>(stage)];
    if (picked_up(relay.ufls_since_(i), w < threshold, time, cfg.trip_delay) && live) {
      const double shed = cfg.ufls_fraction * equilibrium_load(i);
      ++stage;
      net_load(i) = std::max(0.0, net_load(i) - shed);
      relay.ufls_since_(i) = kNotPicked;
      log.events.push_back({EventKind::ufls, time, i, shed * base});
      changed = true;
    }
  }

  for (std::size_t k = 0; k < grid.lines.size(); ++k) {
    const Line& l = grid.lines[k];
    if (!l.is_interconnector || !ind.line_connected[k]) continue;
    const Index li = static_cast<Index>(k);
    const double flow = std::abs(line_flow(angle, voltage, l));
    const double limit = cfg.line_limits(li);
    peaks.line = std::max(peaks.line, flow / limit);
    if (picked_up(relay.line_since_(li), flow > limit, time, cfg.trip_delay) && live) {
      ind.line_connected[k] = 0;
      log.events.push_back({EventKind::line, time, li, 0.0});
      changed = true;
    }
  }
  return changed;
}

bool check_and_trip(const DynamicState& s, const GridCase& grid, const ProtectionConfig& cfg,
                    const Vector& equilibrium_load, IndicatorState& ind, Vector& net_load, EventLog& log,
                    RelayState& relay) {
  return check_and_trip(s.angle, s.frequency, s.voltage, s.governor, s.time, grid, cfg, equilibrium_load, ind,
                        net_load, log, relay);
}

Index island_count(const GridCase& grid, const std::vector<std::uint8_t>& line_connected) {
  std::vector<Index> parent(static_cast<std::size_t>(grid.size()));
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index i) {
    while (parent[static_cast<std::size_t>(i)] != i) {
      parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
      i = parent[static_cast<std::size_t>(i)];
    }
    return i;
  };
  Index islands = grid.size();
  for (std::size_t k = 0; k < grid.lines.size(); ++k) {
    if (!line_connected[k]) continue;
    const Index a = find(grid.lines[k].from), b = find(grid.lines[k].to);
    if (a != b) {
      parent[static_cast<std::size_t>(a)] = b;
      --islands;
    }
  }
  return islands;
}

}  // namespace cascade
