#pragma once

#include "cascade/dynamics.hpp"

#include <functional>
#include <vector>

namespace cascade {

inline const std::vector<int> kAllScenarios{1, 2, 3, 4};

/// Run body(i) for i in [0, count) on up to `threads` workers (0: hardware
/// concurrency). Each index runs exactly once; results must go to per-index
/// slots for determinism.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

/// Untuned thresholds: the frequency defaults of ProtectionConfig and line
/// limits of 1.5 x the largest equilibrium interconnector flow over
/// `scenarios`, floored at 10% of the line rating.
ProtectionConfig default_protection(const GridCase& base, const std::vector<int>& scenarios = kAllScenarios);

/// Every single generator, every bus carrying load, every line whose loss
/// does not split the network.
std::vector<Outage> n1_outages(const GridCase& grid);

struct N1Failure {
  int scenario = 0;
  Outage outage;
  std::string description;
  EventLog events;
};

struct N1Report {
  std::vector<N1Failure> failures;
  std::size_t simulations = 0;
  PeakRatios worst;  ///< component-wise max over every simulation

  bool passed() const { return failures.empty(); }
};

struct N1Options {
  SimulationOptions simulation;  ///< horizon defaults to 60 s
  unsigned threads = 0;
  bool stop_on_first_event = true;
};

/// Simulate each outage with zero attack for each scenario and collect any
/// protection activation.
N1Report verify_n1(const GridCase& base, const ProtectionConfig& cfg, const std::vector<int>& scenarios = kAllScenarios,
                   const N1Options& options = {});

struct CalibrationResult {
  ProtectionConfig config;
  double factor = 1;
  PeakRatios untuned;  ///< worst ratios against the starting thresholds
  N1Report report;
};

/// Scale `initial` outward by the smallest common factor that makes
/// verify_n1 pass. Outage runs with relays in monitor mode give the peak
/// ratio of every relay quantity to its threshold; without trips the
/// trajectories do not depend on the thresholds, so factor = worst ratio
/// (plus `margin`) is the minimum. A verification pass follows; if it still
/// fails (possible with trip delays) the factor grows by 5% and retries.
CalibrationResult calibrate(const GridCase& base, const ProtectionConfig& initial,
                            const std::vector<int>& scenarios = kAllScenarios, const N1Options& options = {},
                            double margin = 0.01);

}  // namespace cascade
