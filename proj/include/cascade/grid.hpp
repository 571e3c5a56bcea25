#pragma once

#include "cascade/types.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cascade {

inline constexpr std::string_view kCaseSchema = "cascade-laa-case/1";

enum class BusKind { generator, load, generator_with_load, transit };

std::string_view to_string(BusKind kind);
BusKind bus_kind_from_string(std::string_view text);

/// Bus parameters in per-unit on the case base (time in seconds).
struct Bus {
  int id = 0;           ///< external bus number from the case file
  BusKind kind = BusKind::load;
  int area = 1;
  double inertia = 0;        ///< M_i = 2 E_kin / S_base  [pu s]
  double damping = 0;        ///< D_i  [pu power / pu frequency]
  double governor_gain = 0;  ///< A_i  [pu power / (pu frequency s)]
  double time_constant = 1;  ///< S_i  [s]
  double reactance = 0;      ///< X_i  [pu]
  double voltage_setpoint = 1;
  double p_gen = 0;
  double p_max = 0;
  double p_load = 0;
  double p_load_max = 0;

  bool has_generator() const { return kind == BusKind::generator || kind == BusKind::generator_with_load; }
  bool has_load() const { return kind == BusKind::load || kind == BusKind::generator_with_load; }

  bool operator==(const Bus&) const = default;
};

struct Line {
  Index from = 0;  ///< bus index (position in GridCase::buses)
  Index to = 0;
  double susceptance = 0;  ///< B_ij > 0
  bool is_interconnector = false;
  double flow_limit = 0;   ///< rating [pu], interconnectors only

  bool operator==(const Line&) const = default;
};

/// The static network after reduction: generator buses occupy indices
/// [0, generator_count()), pure-load buses follow.
struct GridCase {
  std::string name;
  double base_mva = 100;
  double nominal_frequency_hz = 50;
  int scenario = 0;  ///< 0 for the base case, otherwise the applied scenario id
  std::vector<Bus> buses;
  std::vector<Line> lines;
  Matrix susceptance;  ///< Laplacian form: B_ij = line susceptance, B_ii = -sum_j B_ij

  Index size() const { return static_cast<Index>(buses.size()); }
  Index generator_count() const;
  double total_load() const;
  double total_generation() const;
  std::vector<Index> load_buses() const;  ///< every bus with has_load()
  Index bus_index(int id) const;          ///< throws ValidationError if absent
  std::string line_name(Index line) const;

  bool operator==(const GridCase& other) const;
};

/// Parse and validate a case document. Transit buses are eliminated by Kron
/// reduction; every non-zero off-diagonal of the reduced matrix becomes a Line.
GridCase parse_case(std::string_view json_text);
GridCase load_case(const std::filesystem::path& path);

/// Reduced-case document (SI units) that parses back to the same GridCase.
std::string serialize_case(const GridCase& grid);

/// Throws ValidationError naming the offending bus or line.
void validate(const GridCase& grid);

inline constexpr std::array<double, 4> kScenarioFactors{0.4, 1.0, 0.85, 1.3};
inline constexpr std::array<std::string_view, 4> kScenarioLabels{"night", "morning", "afternoon", "evening"};

double scenario_factor(int scenario);

/// Scale every P_L and P_G by the scenario proportion. Caps (P_max,
/// P_L_max) are not scaled. Meant for the base case: applying it to an
/// already-scaled case compounds the factors.
GridCase apply_scenario(const GridCase& base, int scenario);

/// Build the Laplacian susceptance matrix of `lines` over `n` buses.
Matrix laplacian(Index n, const std::vector<Line>& lines);

}  // namespace cascade
