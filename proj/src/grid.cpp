#include "cascade/grid.hpp"

#include "cascade/kron.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace cascade {

using json = nlohmann::json;

std::string_view to_string(BusKind kind) {
  switch (kind) {
    case BusKind::generator: return "generator";
    case BusKind::load: return "load";
    case BusKind::generator_with_load: return "generator_with_load";
    case BusKind::transit: return "transit";
  }
  return "?";
}

BusKind bus_kind_from_string(std::string_view text) {
  if (text == "generator") return BusKind::generator;
  if (text == "load") return BusKind::load;
  if (text == "generator_with_load") return BusKind::generator_with_load;
  if (text == "transit") return BusKind::transit;
  throw ParseError("unknown bus kind '" + std::string(text) + "'");
}

Index GridCase::generator_count() const {
  return std::count_if(buses.begin(), buses.end(), [](const Bus& b) { return b.has_generator(); });
}

double GridCase::total_load() const {
  double sum = 0;
  for (const auto& b : buses) sum += b.p_load;
  return sum;
}

double GridCase::total_generation() const {
  double sum = 0;
  for (const auto& b : buses) sum += b.p_gen;
  return sum;
}

std::vector<Index> GridCase::load_buses() const {
  std::vector<Index> out;
  for (Index i = 0; i < size(); ++i)
    if (buses[static_cast<std::size_t>(i)].has_load()) out.push_back(i);
  return out;
}

Index GridCase::bus_index(int id) const {
  for (Index i = 0; i < size(); ++i)
    if (buses[static_cast<std::size_t>(i)].id == id) return i;
  throw ValidationError("no bus with id " + std::to_string(id));
}

std::string GridCase::line_name(Index line) const {
  const auto& l = lines.at(static_cast<std::size_t>(line));
  return std::to_string(buses[static_cast<std::size_t>(l.from)].id) + "-" +
         std::to_string(buses[static_cast<std::size_t>(l.to)].id);
}

bool GridCase::operator==(const GridCase& other) const {
  return name == other.name && base_mva == other.base_mva &&
         nominal_frequency_hz == other.nominal_frequency_hz && scenario == other.scenario &&
         buses == other.buses && lines == other.lines &&
         susceptance.rows() == other.susceptance.rows() &&
         susceptance.cols() == other.susceptance.cols() && susceptance == other.susceptance;
}

Matrix laplacian(Index n, const std::vector<Line>& lines) {
  Matrix b = Matrix::Zero(n, n);
  for (const auto& l : lines) {
    b(l.from, l.to) += l.susceptance;
    b(l.to, l.from) += l.susceptance;
    b(l.from, l.from) -= l.susceptance;
    b(l.to, l.to) -= l.susceptance;
  }
  return b;
}

namespace {

std::size_t line_of_byte(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

double number(const json& obj, const char* key, const std::string& where,
              std::optional<double> fallback = std::nullopt) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    if (fallback) return *fallback;
    throw ParseError(where + "." + key + ": missing required field");
  }
  if (!it->is_number()) throw ParseError(where + "." + key + ": expected a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw ParseError(where + "." + key + ": not finite");
  return v;
}

int integer(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + "." + key + ": missing required field");
  if (!it->is_number_integer()) throw ParseError(where + "." + key + ": expected an integer");
  return it->get<int>();
}

struct RawBus {
  Bus bus;
  bool inertia_given = false;
};

RawBus parse_bus(const json& j, std::size_t k, double base) {
  const std::string where = "buses[" + std::to_string(k) + "]";
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  RawBus raw;
  Bus& b = raw.bus;
  b.id = integer(j, "id", where);
  auto kind = j.find("kind");
  if (kind == j.end() || !kind->is_string()) throw ParseError(where + ".kind: expected a string");
  try {
    b.kind = bus_kind_from_string(kind->get<std::string>());
  } catch (const ParseError& e) {
    throw ParseError(where + ".kind: " + e.what());
  }
  b.area = integer(j, "area", where);
  if (b.kind == BusKind::transit) return raw;

  if (j.contains("inertia_mws")) {
    b.inertia = 2.0 * number(j, "inertia_mws", where) / base;
    raw.inertia_given = true;
  }
  b.damping = number(j, "damping_mw", where, 0.0) / base;
  b.time_constant = number(j, "time_constant_s", where);
  b.reactance = number(j, "reactance_pu", where);
  b.voltage_setpoint = number(j, "voltage_setpoint_pu", where, 1.0);
  if (b.has_generator()) {
    if (!raw.inertia_given) throw ParseError(where + ".inertia_mws: missing required field");
    b.p_gen = number(j, "p_gen_mw", where) / base;
    b.p_max = number(j, "p_max_mw", where) / base;
    b.governor_gain = number(j, "governor_gain_mw", where, 0.0) / base;
  } else if (j.contains("p_gen_mw") || j.contains("governor_gain_mw")) {
    throw ValidationError("bus " + std::to_string(b.id) + ": pure load bus carries generator fields");
  }
  if (b.has_load()) {
    b.p_load = number(j, "p_load_mw", where) / base;
    b.p_load_max = number(j, "p_load_max_mw", where) / base;
  }
  return raw;
}

bool generator_first(const Bus& a, const Bus& b) {
  if (a.has_generator() != b.has_generator()) return a.has_generator();
  return a.id < b.id;
}

}  // namespace

void validate(const GridCase& grid) {
  if (grid.buses.empty()) throw ValidationError("case has no buses");
  if (!(grid.base_mva > 0)) throw ValidationError("base_mva must be positive");
  if (!(grid.nominal_frequency_hz > 0)) throw ValidationError("nominal_frequency_hz must be positive");
  std::set<int> ids;
  bool seen_load_only = false;
  for (const auto& b : grid.buses) {
    const std::string name = "bus " + std::to_string(b.id);
    if (!ids.insert(b.id).second) throw ValidationError(name + ": duplicate id");
    if (b.kind == BusKind::transit) throw ValidationError(name + ": transit bus survived reduction");
    if (b.area < 1) throw ValidationError(name + ": area must be >= 1");
    if (!b.has_generator()) seen_load_only = true;
    else if (seen_load_only) throw ValidationError(name + ": generator buses must precede pure-load buses");
    if (!(b.inertia > 0)) throw ValidationError(name + ": inertia must be positive");
    if (!(b.time_constant > 0)) throw ValidationError(name + ": time constant must be positive");
    if (b.damping < 0 || b.reactance < 0 || b.governor_gain < 0)
      throw ValidationError(name + ": damping, reactance and governor gain must be non-negative");
    if (b.has_generator()) {
      if (b.p_gen < 0 || b.p_gen > b.p_max) throw ValidationError(name + ": requires 0 <= P_G <= P_max");
    } else if (b.p_gen != 0 || b.governor_gain != 0) {
      throw ValidationError(name + ": pure load bus must have P_G = 0 and A = 0");
    }
    if (b.p_load < 0 || b.p_load > b.p_load_max) throw ValidationError(name + ": requires 0 <= P_L <= P_L_max");
  }
  const Index n = grid.size();
  for (std::size_t k = 0; k < grid.lines.size(); ++k) {
    const auto& l = grid.lines[k];
    const std::string name = "line " + std::to_string(k);
    if (l.from < 0 || l.from >= n || l.to < 0 || l.to >= n) throw ValidationError(name + ": endpoint out of range");
    if (l.from == l.to) throw ValidationError(name + ": from == to");
    if (!(l.susceptance > 0) || !std::isfinite(l.susceptance))
      throw ValidationError(name + " (" + grid.line_name(static_cast<Index>(k)) + "): susceptance must be positive");
    if (l.is_interconnector && !(l.flow_limit > 0))
      throw ValidationError(name + " (" + grid.line_name(static_cast<Index>(k)) + "): interconnector needs a flow limit");
  }
  if (grid.susceptance.rows() != n || grid.susceptance.cols() != n)
    throw ValidationError("susceptance matrix has wrong dimensions");
  if ((grid.susceptance - grid.susceptance.transpose()).cwiseAbs().maxCoeff() > 0)
    throw ValidationError("susceptance matrix is not symmetric");
}

GridCase parse_case(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError("case: JSON syntax error at line " + std::to_string(line_of_byte(text, e.byte)) + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError("case: top level must be an object");
  if (doc.value("schema", std::string()) != kCaseSchema)
    throw ParseError("case.schema: expected \"" + std::string(kCaseSchema) + "\"");

  GridCase grid;
  grid.name = doc.value("name", std::string("case"));
  grid.base_mva = number(doc, "base_mva", "case", 100.0);
  grid.nominal_frequency_hz = number(doc, "nominal_frequency_hz", "case", 50.0);
  if (doc.contains("scenario")) grid.scenario = integer(doc, "scenario", "case");
  if (!(grid.base_mva > 0)) throw ValidationError("base_mva must be positive");
  const double base = grid.base_mva;

  auto buses_it = doc.find("buses");
  if (buses_it == doc.end() || !buses_it->is_array()) throw ParseError("case.buses: expected an array");
  auto lines_it = doc.find("lines");
  if (lines_it == doc.end() || !lines_it->is_array()) throw ParseError("case.lines: expected an array");

  std::vector<RawBus> raw;
  for (std::size_t k = 0; k < buses_it->size(); ++k) raw.push_back(parse_bus((*buses_it)[k], k, base));
  if (raw.empty()) throw ValidationError("case has no buses");

  std::map<int, Index> full_index;
  for (std::size_t k = 0; k < raw.size(); ++k)
    if (!full_index.emplace(raw[k].bus.id, static_cast<Index>(k)).second)
      throw ValidationError("bus " + std::to_string(raw[k].bus.id) + ": duplicate id");

  // Default inertia for pure-load buses: 1 % of the mean generator inertia.
  double gen_inertia = 0;
  int gen_count = 0;
  for (const auto& r : raw)
    if (r.bus.has_generator()) {
      gen_inertia += r.bus.inertia;
      ++gen_count;
    }
  for (auto& r : raw)
    if (r.bus.kind != BusKind::transit && !r.inertia_given) {
      if (gen_count == 0)
        throw ValidationError("bus " + std::to_string(r.bus.id) + ": inertia missing and no generators to derive it from");
      r.bus.inertia = 0.01 * gen_inertia / gen_count;
    }

  struct RawLine {
    Index from, to;
    double b;
    std::optional<double> limit;
  };
  std::vector<RawLine> raw_lines;
  for (std::size_t k = 0; k < lines_it->size(); ++k) {
    const json& j = (*lines_it)[k];
    const std::string where = "lines[" + std::to_string(k) + "]";
    if (!j.is_object()) throw ParseError(where + ": expected an object");
    const int from = integer(j, "from", where);
    const int to = integer(j, "to", where);
    auto f = full_index.find(from);
    auto t = full_index.find(to);
    if (f == full_index.end() || t == full_index.end())
      throw ValidationError(where + " (" + std::to_string(from) + "-" + std::to_string(to) + "): unknown bus");
    if (from == to) throw ValidationError(where + " (" + std::to_string(from) + "-" + std::to_string(to) + "): from == to");
    double b;
    if (j.contains("b_pu")) {
      b = number(j, "b_pu", where);
    } else {
      const double x = number(j, "x_pu", where);
      if (!(x > 0)) throw ValidationError(where + " (" + std::to_string(from) + "-" + std::to_string(to) + "): reactance must be positive");
      b = 1.0 / x;
    }
    if (!(b > 0)) throw ValidationError(where + " (" + std::to_string(from) + "-" + std::to_string(to) + "): susceptance must be positive");
    std::optional<double> limit;
    if (j.contains("flow_limit_mw")) limit = number(j, "flow_limit_mw", where) / base;
    raw_lines.push_back({f->second, t->second, b, limit});
  }

  // Retained buses in output order: generators first, then loads, by id.
  std::vector<Index> keep;
  for (std::size_t k = 0; k < raw.size(); ++k)
    if (raw[k].bus.kind != BusKind::transit) keep.push_back(static_cast<Index>(k));
  std::stable_sort(keep.begin(), keep.end(), [&](Index a, Index b) {
    return generator_first(raw[static_cast<std::size_t>(a)].bus, raw[static_cast<std::size_t>(b)].bus);
  });
  if (keep.empty()) throw ValidationError("case has no generator or load buses");
  for (Index k : keep) grid.buses.push_back(raw[static_cast<std::size_t>(k)].bus);

  const bool reduce = keep.size() != raw.size();
  std::vector<Index> position(raw.size(), -1);
  for (std::size_t k = 0; k < keep.size(); ++k) position[static_cast<std::size_t>(keep[k])] = static_cast<Index>(k);

  if (!reduce) {
    for (const auto& rl : raw_lines) {
      Line l;
      l.from = position[static_cast<std::size_t>(rl.from)];
      l.to = position[static_cast<std::size_t>(rl.to)];
      l.susceptance = rl.b;
      if (rl.limit) l.flow_limit = *rl.limit;
      grid.lines.push_back(l);
    }
  } else {
    std::vector<Line> full_lines;
    for (const auto& rl : raw_lines) full_lines.push_back({rl.from, rl.to, rl.b, false, 0});
    Matrix full = laplacian(static_cast<Index>(raw.size()), full_lines);
    Matrix reduced;
    try {
      reduced = kron_reduce(full, keep);
    } catch (const ReductionError& e) {
      throw ValidationError(std::string("case: cannot eliminate transit buses: ") + e.what());
    }
    const double scale = reduced.cwiseAbs().maxCoeff();
    const Index n = static_cast<Index>(keep.size());
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) {
        const double b = reduced(i, j);
        if (std::abs(b) <= 1e-10 * scale) continue;
        if (b < 0)
          throw ValidationError("case: Kron reduction produced a negative branch between buses " +
                                std::to_string(grid.buses[static_cast<std::size_t>(i)].id) + " and " +
                                std::to_string(grid.buses[static_cast<std::size_t>(j)].id));
        grid.lines.push_back({i, j, b, false, 0});
      }
  }

  for (auto& l : grid.lines) {
    l.is_interconnector =
        grid.buses[static_cast<std::size_t>(l.from)].area != grid.buses[static_cast<std::size_t>(l.to)].area;
    if (!l.is_interconnector) l.flow_limit = 0;
    else if (!(l.flow_limit > 0)) l.flow_limit = l.susceptance;
  }
  grid.susceptance = laplacian(grid.size(), grid.lines);
  validate(grid);
  return grid;
}

GridCase load_case(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open case file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_case(buf.str());
}

std::string serialize_case(const GridCase& grid) {
  const double base = grid.base_mva;
  json doc;
  doc["schema"] = kCaseSchema;
  doc["name"] = grid.name;
  doc["base_mva"] = grid.base_mva;
  doc["nominal_frequency_hz"] = grid.nominal_frequency_hz;
  if (grid.scenario != 0) doc["scenario"] = grid.scenario;
  json buses = json::array();
  for (const auto& b : grid.buses) {
    json j;
    j["id"] = b.id;
    j["kind"] = to_string(b.kind);
    j["area"] = b.area;
    j["inertia_mws"] = b.inertia * base / 2.0;
    j["damping_mw"] = b.damping * base;
    j["time_constant_s"] = b.time_constant;
    j["reactance_pu"] = b.reactance;
    j["voltage_setpoint_pu"] = b.voltage_setpoint;
    if (b.has_generator()) {
      j["p_gen_mw"] = b.p_gen * base;
      j["p_max_mw"] = b.p_max * base;
      j["governor_gain_mw"] = b.governor_gain * base;
    }
    if (b.has_load()) {
      j["p_load_mw"] = b.p_load * base;
      j["p_load_max_mw"] = b.p_load_max * base;
    }
    buses.push_back(std::move(j));
  }
  doc["buses"] = std::move(buses);
  json lines = json::array();
  for (const auto& l : grid.lines) {
    json j;
    j["from"] = grid.buses[static_cast<std::size_t>(l.from)].id;
    j["to"] = grid.buses[static_cast<std::size_t>(l.to)].id;
    j["b_pu"] = l.susceptance;
    if (l.is_interconnector && l.flow_limit != l.susceptance) j["flow_limit_mw"] = l.flow_limit * base;
    lines.push_back(std::move(j));
  }
  doc["lines"] = std::move(lines);
  return doc.dump(1);
}

double scenario_factor(int scenario) {
  if (scenario < 1 || scenario > 4)
    throw ValidationError("scenario id must be in 1..4, got " + std::to_string(scenario));
  return kScenarioFactors[static_cast<std::size_t>(scenario - 1)];
}

GridCase apply_scenario(const GridCase& base, int scenario) {
  const double factor = scenario_factor(scenario);
  GridCase out = base;
  out.scenario = scenario;
  for (auto& b : out.buses) {
    b.p_load *= factor;
    b.p_gen *= factor;
  }
  return out;
}

}  // namespace cascade
