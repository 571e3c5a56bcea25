#include "cascade/equilibrium.hpp"

#include <cmath>
#include <sstream>

namespace cascade {

namespace {

struct Flows {
  Vector p;    // sum_j B_ij E_i E_j sin(d_ij)
  Vector cs;   // sum_j B_ij E_j cos(d_ij)
};

Flows flows(const Matrix& b, const Vector& delta, const Vector& e) {
  const Index n = delta.size();
  Flows f{Vector::Zero(n), Vector::Zero(n)};
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (b(i, j) == 0) continue;
      const double d = delta(i) - delta(j);
      f.p(i) += b(i, j) * e(i) * e(j) * std::sin(d);
      f.cs(i) += b(i, j) * e(j) * std::cos(d);
    }
  return f;
}

}  // namespace

EquilibriumState solve_equilibrium(const GridCase& grid, const EquilibriumOptions& options) {
  const Index n = grid.size();
  const Index gens = grid.generator_count();
  const Matrix& b = grid.susceptance;

  Vector injection(n), reactance(n);
  for (Index i = 0; i < n; ++i) {
    const Bus& bus = grid.buses[static_cast<std::size_t>(i)];
    injection(i) = bus.p_gen - bus.p_load;
    reactance(i) = bus.reactance;
  }
  const double imbalance = injection.sum();
  if (std::abs(imbalance) > options.tolerance) {
    std::ostringstream msg;
    msg << "generation and load are not balanced: mismatch " << imbalance * grid.base_mva << " MW";
    throw ValidationError(msg.str());
  }

  Vector delta = Vector::Zero(n);
  Vector e = Vector::Ones(n);
  for (Index g = 0; g < gens; ++g) e(g) = grid.buses[static_cast<std::size_t>(g)].voltage_setpoint;

  const Index loads = n - gens;
  const Index m = (n - 1) + loads;

  auto residual_vec = [&](const Vector& d, const Vector& v) {
    const Flows f = flows(b, d, v);
    Vector r(m);
    for (Index i = 1; i < n; ++i) r(i - 1) = f.p(i) - injection(i);
    for (Index k = 0; k < loads; ++k) {
      const Index i = gens + k;
      r(n - 1 + k) = -v(i) + reactance(i) * f.cs(i);
    }
    return r;
  };

  auto apply = [&](const Vector& step, double t, Vector& d, Vector& v) {
    for (Index i = 1; i < n; ++i) d(i) += t * step(i - 1);
    for (Index k = 0; k < loads; ++k) v(gens + k) += t * step(n - 1 + k);
  };

  Vector r = residual_vec(delta, e);
  double norm = m > 0 ? r.cwiseAbs().maxCoeff() : 0.0;
  int it = 0;
  const double target = 1e-13;
  while (norm > target && it < options.max_iterations) {
    ++it;
    Matrix jac = Matrix::Zero(m, m);
    // Row/column maps: angle unknown of bus i -> i-1; voltage unknown of load bus i -> n-1+(i-gens).
    auto angle_col = [](Index i) { return i - 1; };
    auto volt_col = [&](Index i) { return i >= gens ? n - 1 + (i - gens) : Index(-1); };
    for (Index i = 0; i < n; ++i) {
      const bool p_row = i >= 1;
      const bool q_row = i >= gens;
      const Index pr = i - 1;
      const Index qr = n - 1 + (i - gens);
      for (Index j = 0; j < n; ++j) {
        if (j == i || b(i, j) == 0) continue;
        const double d = delta(i) - delta(j);
        const double s = std::sin(d), c = std::cos(d);
        if (p_row) {
          // dP_i/dd_i, dP_i/dd_j, dP_i/dE_i, dP_i/dE_j
          jac(pr, angle_col(i)) += b(i, j) * e(i) * e(j) * c;
          if (j >= 1) jac(pr, angle_col(j)) -= b(i, j) * e(i) * e(j) * c;
          if (volt_col(i) >= 0) jac(pr, volt_col(i)) += b(i, j) * e(j) * s;
          if (volt_col(j) >= 0) jac(pr, volt_col(j)) += b(i, j) * e(i) * s;
        }
        if (q_row) {
          if (i >= 1) jac(qr, angle_col(i)) -= reactance(i) * b(i, j) * e(j) * s;
          if (j >= 1) jac(qr, angle_col(j)) += reactance(i) * b(i, j) * e(j) * s;
          if (volt_col(j) >= 0) jac(qr, volt_col(j)) += reactance(i) * b(i, j) * c;
        }
      }
      if (q_row) jac(qr, volt_col(i)) += -1.0 + reactance(i) * b(i, i);
    }

    Eigen::FullPivLU<Matrix> lu(jac);
    if (!lu.isInvertible())
      throw NonConvergenceError("equilibrium: singular Jacobian (islanded or degenerate network)", norm);
    const Vector step = lu.solve(-r);

    double t = 1.0;
    Vector d_try, v_try, r_try;
    double n_try = norm;
    for (int halvings = 0; halvings < 30; ++halvings, t *= 0.5) {
      d_try = delta;
      v_try = e;
      apply(step, t, d_try, v_try);
      r_try = residual_vec(d_try, v_try);
      n_try = r_try.cwiseAbs().maxCoeff();
      if (std::isfinite(n_try) && n_try < norm) break;
    }
    if (!(n_try < norm)) break;  // no further progress possible
    delta = d_try;
    e = v_try;
    r = r_try;
    norm = n_try;
  }

  // Field voltage that makes each generator's voltage equation stationary.
  const Flows f = flows(b, delta, e);
  EquilibriumState eq;
  eq.field_voltage.resize(gens);
  for (Index g = 0; g < gens; ++g) eq.field_voltage(g) = e(g) - reactance(g) * f.cs(g);

  double residual = 0;
  for (Index i = 0; i < n; ++i) {
    residual = std::max(residual, std::abs(f.p(i) - injection(i)));
    const double drive = i < gens ? eq.field_voltage(i) : 0.0;
    residual = std::max(residual, std::abs(drive - e(i) + reactance(i) * f.cs(i)));
  }
  eq.angle = delta;
  eq.voltage = e;
  eq.residual = residual;
  eq.iterations = it;
  if (!(residual <= options.tolerance)) {
    std::ostringstream msg;
    msg << "equilibrium: Newton did not converge in " << it << " iterations (residual " << residual << ")";
    throw NonConvergenceError(msg.str(), residual);
  }
  return eq;
}

DynamicState OperatingPoint::initial_state() const {
  DynamicState s;
  s.angle = equilibrium.angle;
  s.frequency = Vector::Zero(grid.size());
  s.voltage = equilibrium.voltage;
  s.governor = Vector::Zero(grid.generator_count());
  s.time = 0;
  return s;
}

Vector OperatingPoint::equilibrium_load() const {
  Vector load(grid.size());
  for (Index i = 0; i < grid.size(); ++i) load(i) = grid.buses[static_cast<std::size_t>(i)].p_load;
  return load;
}

SwingModel OperatingPoint::model(const DynamicsParams& params) const {
  return SwingModel(grid, equilibrium.field_voltage, equilibrium.voltage.head(grid.generator_count()), params);
}

OperatingPoint make_operating_point(GridCase grid, const EquilibriumOptions& options) {
  OperatingPoint op{std::move(grid), {}};
  op.equilibrium = solve_equilibrium(op.grid, options);
  return op;
}

OperatingPoint make_operating_point(const GridCase& base, int scenario, const EquilibriumOptions& options) {
  return make_operating_point(apply_scenario(base, scenario), options);
}

}  // namespace cascade
