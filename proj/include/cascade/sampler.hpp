#pragma once

#include "cascade/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace cascade {

using Rng = std::mt19937_64;

/// Fold x back into [lo, hi] by repeated mirror reflection. Infinite bounds
/// leave the coordinate alone.
inline double reflect(double x, double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    if (std::isfinite(lo) && x < lo) return 2 * lo - x;
    if (std::isfinite(hi) && x > hi) return 2 * hi - x;
    return x;
  }
  const double width = hi - lo;
  if (width <= 0) return lo;
  double r = std::fmod(x - lo, 2 * width);
  if (r < 0) r += 2 * width;
  return r <= width ? lo + r : hi - (r - width);
}

/// Random-walk kernel with directional skipping.
///
/// Z1 = u + scale .* xi with xi ~ N(0, I) over the coordinates whose scale is
/// positive. The skip direction is xi / |xi| in scaled coordinates and each
/// skip adds scale .* phi * R with R half-normal. Coordinates with zero scale
/// only move through `jump`, which is applied to Z1 and must be a symmetric
/// kernel on its own. Points are folded into [lower, upper] before the target
/// sees them; the walk itself runs unfolded.
struct SkipKernel {
  Vector scale;
  Vector lower, upper;  ///< empty: unbounded
  double halting_mean = 10;
  int halting_cap = 100;
  std::function<void(Vector&, Rng&)> jump;

  int draw_halting(Rng& rng) const {
    if (halting_mean <= 1) return 1;
    std::geometric_distribution<int> g(1.0 / halting_mean);
    return std::min(halting_cap, 1 + g(rng));
  }

  Vector fold(const Vector& x) const {
    if (lower.size() == 0) return x;
    Vector y(x.size());
    for (Index j = 0; j < x.size(); ++j) y(j) = reflect(x(j), lower(j), upper(j));
    return y;
  }
};

/// Diagnostics for one chain. `skips[k]` counts proposals that used k skips.
struct ChainStats {
  std::uint64_t proposals = 0;
  std::uint64_t accepts = 0;
  std::uint64_t oracle_calls = 0;
  std::vector<std::uint64_t> skips;

  double acceptance_rate() const {
    return proposals ? static_cast<double>(accepts) / static_cast<double>(proposals) : 0.0;
  }
};

struct ChainState {
  Vector point;
  double pi = 0;  ///< rho * 1_A at `point`, unnormalized
  Rng rng;
  ChainStats stats;
};

struct Proposal {
  Vector point;  ///< folded
  int skips = 0;
  bool in_set = false;
};

struct StepResult {
  Proposal proposal;
  bool accepted = false;
};

/// Skip loop of one proposal: starting at the unfolded Z1, step by
/// `direction * radial()` while the folded point is outside A and fewer than
/// `halt` points have been tried.
template <typename Fold, typename Contains, typename Radial>
Proposal skip_walk(Vector z, const Vector& direction, int halt, Fold&& fold, Contains&& contains, Radial&& radial) {
  Proposal p;
  p.point = fold(z);
  p.in_set = contains(p.point);
  int k = 1;
  while (!p.in_set && k < halt) {
    z += direction * radial();
    p.point = fold(z);
    p.in_set = contains(p.point);
    ++k;
  }
  p.skips = k - 1;
  return p;
}

/// Target: `double density(const Vector&)` gives rho up to a constant (zero
/// outside its support) and `bool contains(const Vector&)` is the condition
/// oracle. The oracle is called once per candidate in skip order; the last
/// call of a step is always on the returned point.
template <typename Target>
class SkippingSampler {
public:
  SkippingSampler(Target& target, SkipKernel kernel) : target_(target), kernel_(std::move(kernel)) {}

  const SkipKernel& kernel() const { return kernel_; }
  SkipKernel& kernel() { return kernel_; }

  ChainState start(const Vector& point, std::uint64_t seed) {
    ChainState s;
    s.point = kernel_.fold(point);
    s.rng.seed(seed);
    s.stats.skips.assign(static_cast<std::size_t>(kernel_.halting_cap), 0);
    ++s.stats.oracle_calls;
    s.pi = target_.contains(s.point) ? target_.density(s.point) : 0.0;
    return s;
  }

  Proposal propose(const Vector& u, Rng& rng, ChainStats& stats) {
    std::normal_distribution<double> normal;
    const Index d = u.size();
    Vector xi = Vector::Zero(d);
    double norm = 0;
    // A zero-length step has no direction; redraw.
    while (norm == 0) {
      for (Index j = 0; j < d; ++j)
        if (kernel_.scale(j) > 0) xi(j) = normal(rng);
      norm = xi.norm();
      if (kernel_.scale.maxCoeff() <= 0) break;
    }
    Vector z = u + kernel_.scale.cwiseProduct(xi);
    if (kernel_.jump) kernel_.jump(z, rng);
    const Vector phi = norm > 0 ? Vector(xi / norm) : xi;
    const int halt = kernel_.draw_halting(rng);

    return skip_walk(
        std::move(z), kernel_.scale.cwiseProduct(phi), halt, [&](const Vector& x) { return kernel_.fold(x); },
        [&](const Vector& x) {
          ++stats.oracle_calls;
          return target_.contains(x);
        },
        [&] { return std::abs(normal(rng)); });
  }

  /// min(1, pi(z) / pi(u)), or 1 when pi(u) = 0.
  static double acceptance_probability(double pi_u, double pi_z) {
    if (pi_u == 0) return 1.0;
    return std::min(1.0, pi_z / pi_u);
  }

  StepResult step(ChainState& s) {
    StepResult r;
    r.proposal = propose(s.point, s.rng, s.stats);
    const double pi_z = r.proposal.in_set ? target_.density(r.proposal.point) : 0.0;
    const double alpha = acceptance_probability(s.pi, pi_z);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    r.accepted = unit(s.rng) < alpha;
    ++s.stats.proposals;
    const auto bin = std::min<std::size_t>(static_cast<std::size_t>(r.proposal.skips), s.stats.skips.size() - 1);
    ++s.stats.skips[bin];
    if (r.accepted) {
      ++s.stats.accepts;
      s.point = r.proposal.point;
      s.pi = pi_z;
    }
    return r;
  }

private:
  Target& target_;
  SkipKernel kernel_;
};

/// Scale update used by pilot tuning: multiply by exp(rate - target), which
/// widens steps when too many are accepted and shrinks them otherwise.
inline double retune_factor(double rate, double target = 0.25) { return std::exp(rate - target); }

/// splitmix64, used to derive per-chain seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace cascade
