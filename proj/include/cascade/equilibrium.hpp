#pragma once

#include "cascade/grid.hpp"
#include "cascade/state.hpp"
#include "cascade/swing.hpp"

namespace cascade {

/// Pre-attack operating point. Generator voltages sit at their setpoints;
/// the field voltage that holds them there is derived and stored per generator.
struct EquilibriumState {
  Vector angle;          ///< rad, reference bus 0 at 0
  Vector voltage;        ///< pu
  Vector field_voltage;  ///< E_f per generator, pu
  double residual = 0;   ///< max |power or voltage mismatch|, pu
  int iterations = 0;
};

struct EquilibriumOptions {
  double tolerance = 1e-8;
  int max_iterations = 50;
};

/// Damped Newton on the algebraic equations from a flat start. Unknowns are
/// the angles of buses 1..n-1 and the voltages of pure-load buses. Throws
/// ValidationError if generation and load do not balance, and
/// NonConvergenceError (carrying the last residual) otherwise.
EquilibriumState solve_equilibrium(const GridCase& grid, const EquilibriumOptions& options = {});

/// A scenario-scaled case together with its equilibrium. Owns the grid so
/// models built from it can hold references.
struct OperatingPoint {
  GridCase grid;
  EquilibriumState equilibrium;

  DynamicState initial_state() const;
  Vector equilibrium_load() const;  ///< P_L per bus, pu
  SwingModel model(const DynamicsParams& params = {}) const;
};

OperatingPoint make_operating_point(const GridCase& base, int scenario, const EquilibriumOptions& options = {});
OperatingPoint make_operating_point(GridCase grid, const EquilibriumOptions& options = {});

}  // namespace cascade
