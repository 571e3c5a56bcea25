#pragma once

#include "cascade/dynamics.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cascade {

inline constexpr std::string_view kConfigSchema = "cascade-laa-config/1";

/// Sampling box of the attack parameters.
struct AttackBounds {
  double lambda0_max_mw = 1000;
  int t_max_s = 60;
  double c_min = 0.5;
  double c_max = 5;
  std::vector<int> scenarios{1, 2, 3, 4};
  std::vector<int> vulnerable_buses;  ///< external ids; empty means every load bus
};

struct SamplerConfig {
  std::uint64_t proposals = 100000;  ///< total over all chains, pilot excluded
  unsigned chains = 4;
  std::uint64_t seed = 1;
  double lambda_scale_mw = 100;  ///< initial step scales before pilot tuning
  double interval_scale_s = 6;
  double gain_scale = 0.45;
  double tau_resample = 0.2;
  double halting_mean = 10;
  int halting_cap = 100;
  std::uint64_t pilot_proposals = 2000;
  std::uint64_t pilot_batch = 200;
  double pilot_target = 0.2;
  double pilot_low = 0.15;
  double pilot_high = 0.48;
  std::uint64_t checkpoint_every = 1000;
};

struct CampaignConfig {
  std::filesystem::path case_path;
  std::filesystem::path protection_path;  ///< empty: auto-calibrate
  SimulationOptions simulation;           ///< dt, horizon = T_max, dynamics parameters
  AttackBounds attack;
  SamplerConfig sampler;
  unsigned threads = 0;
  std::filesystem::path output_dir = "out";
};

/// Paths in the document are resolved against `base_dir`.
CampaignConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
CampaignConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const CampaignConfig& cfg);
void validate(const CampaignConfig& cfg);

}  // namespace cascade
