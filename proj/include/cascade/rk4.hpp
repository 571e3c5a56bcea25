#pragma once

#include <Eigen/Core>

namespace cascade {

/// Classical fourth-order Runge-Kutta on a fixed step. `Rhs` is any callable
/// `void(const State& x, State& dxdt)`; the caller supplies k1 = f(x) so the
/// derivative already evaluated for event detection is reused.
template <typename State>
class Rk4 {
public:
  explicit Rk4(Eigen::Index size) : k2_(size), k3_(size), k4_(size), stage_(size) {}

  template <typename Rhs>
  void step(Rhs&& rhs, State& x, const State& k1, double dt) {
    stage_ = x + (0.5 * dt) * k1;
    rhs(stage_, k2_);
    stage_ = x + (0.5 * dt) * k2_;
    rhs(stage_, k3_);
    stage_ = x + dt * k3_;
    rhs(stage_, k4_);
    x += (dt / 6.0) * (k1 + 2.0 * k2_ + 2.0 * k3_ + k4_);
  }

  template <typename Rhs>
  void step(Rhs&& rhs, State& x, double dt) {
    State k1(x.size());
    rhs(x, k1);
    step(rhs, x, k1, dt);
  }

private:
  State k2_, k3_, k4_, stage_;
};

}  // namespace cascade
