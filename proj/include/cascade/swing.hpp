#pragma once

#include "cascade/grid.hpp"
#include "cascade/state.hpp"

namespace cascade {

struct DynamicsParams {
  double deadband = 0.015;          ///< governor deadband half-width, pu frequency
  double avr_gain = 0.0;            ///< K_v in v_i = K_v (E_i - E_ref,i); 0 disables regulation
  double divergence_limit = 10.0;   ///< abort when any |frequency| exceeds this, pu
};

/// Right-hand side of the third-order structure-preserving model on a flat
/// state x = [angle(n), frequency(n), voltage(n), governor(N)].
///
/// Generator buses (i < N):
///   M_i w_i'  = psi_i chiG_i - chiL_i - E_i sum_j B_ij E_j sin(d_ij) - D_i w_i
///   S_i E_i'  = psi_i (Ef_i - v_i) - E_i + X_i sum_j B_ij E_j cos(d_ij)
///   rho_i'    = -A_i w_i  outside the deadband, 0 inside
///   chiG_i    = min(Pmax_i, PG_i + rho_i)
/// Load buses drop the generation, field and governor terms.
/// d_i' = 2 pi f_nom w_i everywhere.
class SwingModel {
public:
  SwingModel(const GridCase& grid, Vector field_voltage, Vector voltage_reference, DynamicsParams params = {});

  Index buses() const { return n_; }
  Index generators() const { return gens_; }
  Index state_size() const { return 3 * n_ + gens_; }
  double angular_base() const { return omega_base_; }
  const DynamicsParams& params() const { return params_; }

  void set_indicators(const IndicatorState& ind);
  const Matrix& coupling() const { return coupling_; }

  void evaluate(const Vector& x, const Vector& net_load, Vector& dxdt) const;

  /// chiG_i for every generator at state x (ignores psi).
  Vector generation(const Vector& x) const;

  Vector pack(const DynamicState& s) const;
  DynamicState unpack(const Vector& x, double time) const;

  auto angle(const Vector& x) const { return x.segment(0, n_); }
  auto frequency(const Vector& x) const { return x.segment(n_, n_); }
  auto voltage(const Vector& x) const { return x.segment(2 * n_, n_); }
  auto governor(const Vector& x) const { return x.segment(3 * n_, gens_); }

private:
  const GridCase* grid_;
  Index n_;
  Index gens_;
  double omega_base_;
  DynamicsParams params_;
  Vector inertia_, damping_, gain_, time_constant_, reactance_, p_gen_, p_max_;
  Vector field_voltage_, voltage_reference_;
  Vector connected_;  // psi as 0/1 doubles, size N
  Matrix coupling_;   // B(Omega)

  mutable Eigen::Matrix<double, Eigen::Dynamic, 2> phasor_, projected_;
  mutable Vector cos_, sin_, sin_sum_, cos_sum_;
};

/// Net power flow E_i E_j B_ij sin(d_i - d_j) from `from` to `to`.
template <typename AngleVec, typename VoltVec>
double line_flow(const Eigen::MatrixBase<AngleVec>& angle, const Eigen::MatrixBase<VoltVec>& voltage,
                 const Line& line) {
  return voltage(line.from) * voltage(line.to) * line.susceptance * std::sin(angle(line.from) - angle(line.to));
}

}  // namespace cascade
