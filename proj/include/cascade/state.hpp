#pragma once

#include "cascade/grid.hpp"

#include <cstdint>
#include <vector>

namespace cascade {

/// Per-bus machine state. `frequency` is the per-unit deviation from the
/// nominal frequency; angles advance as d(angle)/dt = 2 pi f_nom * frequency.
/// `governor` holds rho_i for the generator buses only.
struct DynamicState {
  Vector angle;
  Vector frequency;
  Vector voltage;
  Vector governor;
  double time = 0;

  bool operator==(const DynamicState& o) const {
    return time == o.time && angle == o.angle && frequency == o.frequency && voltage == o.voltage &&
           governor == o.governor;
  }
};

/// Disconnection indicators. Within one simulation generator and line flags
/// only go 1 -> 0 and UFLS stages only increase.
struct IndicatorState {
  std::vector<std::uint8_t> generator_connected;  ///< psi, one per generator bus
  std::vector<std::uint8_t> line_connected;       ///< Omega, one per line
  std::vector<int> ufls_stage;                    ///< R, one per bus, 0..4

  static IndicatorState all_connected(const GridCase& grid);
  bool operator==(const IndicatorState&) const = default;
};

inline constexpr int kUflsStages = 4;

inline IndicatorState IndicatorState::all_connected(const GridCase& grid) {
  IndicatorState ind;
  ind.generator_connected.assign(static_cast<std::size_t>(grid.generator_count()), 1);
  ind.line_connected.assign(grid.lines.size(), 1);
  ind.ufls_stage.assign(grid.buses.size(), 0);
  return ind;
}

}  // namespace cascade
