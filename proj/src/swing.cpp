#include "cascade/swing.hpp"

#include <cmath>
#include <numbers>

namespace cascade {

SwingModel::SwingModel(const GridCase& grid, Vector field_voltage, Vector voltage_reference, DynamicsParams params)
    : grid_(&grid),
      n_(grid.size()),
      gens_(grid.generator_count()),
      omega_base_(2.0 * std::numbers::pi * grid.nominal_frequency_hz),
      params_(params),
      inertia_(n_),
      damping_(n_),
      gain_(gens_),
      time_constant_(n_),
      reactance_(n_),
      p_gen_(gens_),
      p_max_(gens_),
      field_voltage_(std::move(field_voltage)),
      voltage_reference_(std::move(voltage_reference)),
      connected_(Vector::Ones(gens_)),
      coupling_(grid.susceptance),
      phasor_(n_, 2),
      projected_(n_, 2),
      cos_(n_),
      sin_(n_),
      sin_sum_(n_),
      cos_sum_(n_) {
  if (field_voltage_.size() != gens_ || voltage_reference_.size() != gens_)
    throw ValidationError("SwingModel: field voltage and reference must have one entry per generator");
  for (Index i = 0; i < n_; ++i) {
    const Bus& b = grid.buses[static_cast<std::size_t>(i)];
    inertia_(i) = b.inertia;
    damping_(i) = b.damping;
    time_constant_(i) = b.time_constant;
    reactance_(i) = b.reactance;
    if (i < gens_) {
      gain_(i) = b.governor_gain;
      p_gen_(i) = b.p_gen;
      p_max_(i) = b.p_max;
    }
  }
}

void SwingModel::set_indicators(const IndicatorState& ind) {
  for (Index g = 0; g < gens_; ++g) connected_(g) = ind.generator_connected[static_cast<std::size_t>(g)] ? 1.0 : 0.0;
  bool all_lines = true;
  for (auto c : ind.line_connected) all_lines = all_lines && c;
  if (all_lines) {
    coupling_ = grid_->susceptance;
    return;
  }
  std::vector<Line> live;
  for (std::size_t k = 0; k < grid_->lines.size(); ++k)
    if (ind.line_connected[k]) live.push_back(grid_->lines[k]);
  coupling_ = laplacian(n_, live);
}

Vector SwingModel::generation(const Vector& x) const {
  return (p_gen_ + governor(x)).cwiseMin(p_max_);
}

void SwingModel::evaluate(const Vector& x, const Vector& net_load, Vector& dxdt) const {
  const auto delta = angle(x);
  const auto w = frequency(x);
  const auto e = voltage(x);
  const auto rho = governor(x);

  cos_ = delta.array().cos().matrix();
  sin_ = delta.array().sin().matrix();
  phasor_.col(0) = e.cwiseProduct(cos_);
  phasor_.col(1) = e.cwiseProduct(sin_);
  projected_.col(0).noalias() = coupling_ * phasor_.col(0);
  projected_.col(1).noalias() = coupling_ * phasor_.col(1);

  // sum_j B_ij E_j sin(d_i - d_j) and sum_j B_ij E_j cos(d_i - d_j)
  sin_sum_ = sin_.cwiseProduct(projected_.col(0)) - cos_.cwiseProduct(projected_.col(1));
  cos_sum_ = cos_.cwiseProduct(projected_.col(0)) + sin_.cwiseProduct(projected_.col(1));

  dxdt.resize(state_size());
  dxdt.segment(0, n_) = omega_base_ * w;

  auto dw = dxdt.segment(n_, n_);
  auto de = dxdt.segment(2 * n_, n_);
  dw = -net_load - e.cwiseProduct(sin_sum_) - damping_.cwiseProduct(w);
  de = reactance_.cwiseProduct(cos_sum_) - e;
  if (gens_ > 0) {
    dw.head(gens_).array() +=
        connected_.array() * (p_gen_ + rho).cwiseMin(p_max_).array();
    de.head(gens_).array() +=
        connected_.array() *
        (field_voltage_ - params_.avr_gain * (e.head(gens_) - voltage_reference_)).array();
  }
  dw.array() /= inertia_.array();
  de.array() /= time_constant_.array();
  for (Index g = 0; g < gens_; ++g)
    dxdt(3 * n_ + g) = std::abs(w(g)) > params_.deadband ? -gain_(g) * w(g) : 0.0;
}

Vector SwingModel::pack(const DynamicState& s) const {
  Vector x(state_size());
  x << s.angle, s.frequency, s.voltage, s.governor;
  return x;
}

DynamicState SwingModel::unpack(const Vector& x, double time) const {
  DynamicState s;
  s.angle = angle(x);
  s.frequency = frequency(x);
  s.voltage = voltage(x);
  s.governor = governor(x);
  s.time = time;
  return s;
}

}  // namespace cascade
