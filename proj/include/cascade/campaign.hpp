#pragma once

#include "cascade/config.hpp"
#include "cascade/dynamics.hpp"
#include "cascade/sampler.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace cascade {

/// Attack document used by `simulate`: lambda0 keyed by external bus id.
AttackVector parse_attack(std::string_view json_text, const GridCase& grid);
std::string serialize_attack(const AttackVector& attack, const GridCase& grid);

/// Case, thresholds and the four operating points a campaign samples over.
///
/// Sampler coordinates are x = (lambda0 per node, I, C, tau). I lives on
/// [0.5, T_max + 0.5] and is rounded for the simulation, so every integer
/// interval owns the same length; tau only changes by resampling.
struct CampaignModel {
  GridCase base;
  ProtectionConfig protection;
  std::vector<OperatingPoint> points;  ///< points[tau - 1]
  std::vector<Index> nodes;
  AttackBounds bounds;
  SimulationOptions simulation;

  Index dimension() const { return static_cast<Index>(nodes.size()) + 3; }
  Index interval_coord() const { return static_cast<Index>(nodes.size()); }
  Index gain_coord() const { return interval_coord() + 1; }
  Index tau_coord() const { return interval_coord() + 2; }

  AttackVector decode(const Vector& x) const;
  Vector encode(const AttackVector& attack) const;
  const OperatingPoint& point(int tau) const { return points.at(static_cast<std::size_t>(tau - 1)); }
  bool in_box(const Vector& x) const;
};

CampaignModel make_campaign_model(GridCase base, const ProtectionConfig& protection, const CampaignConfig& cfg);

struct OracleResult {
  bool in_set = false;
  bool failed = false;  ///< equilibrium or integration error; counted as outside A
  std::string error;
  SimRecord record;
};

/// In A iff at least one relay fired, including runs that diverged after
/// logging events.
OracleResult condition_oracle(const CampaignModel& model, const AttackVector& attack);

/// Everything a record row needs about one chain state.
struct SampleSummary {
  AttackVector attack;
  CascadeMetrics cascade;
  AttackMetrics attack_metrics;
  bool diverged = false;
  std::string first_kind;  ///< empty when no event
  double first_time = 0;
};

SampleSummary summarize(const CampaignModel& model, const AttackVector& attack, const SimRecord& record);

/// Condition target handed to the sampler; keeps the summary of the most
/// recent oracle call.
class CampaignTarget {
public:
  explicit CampaignTarget(const CampaignModel& model) : model_(model) {}
  bool contains(const Vector& x);
  double density(const Vector& x) const { return model_.in_box(x) ? 1.0 : 0.0; }

  std::shared_ptr<const SampleSummary> last() const { return last_; }
  std::uint64_t failures() const { return failures_; }

private:
  const CampaignModel& model_;
  std::shared_ptr<const SampleSummary> last_;
  std::uint64_t failures_ = 0;
};

/// Coarse search for a starting point in A: lambda0 at fractions 1, 1/2,
/// 1/4 of the cap on every node, scenarios from heaviest to lightest, I = 1,
/// C = C_max. Throws ValidationError if none of them fires a relay.
AttackVector find_witness(const CampaignModel& model);

SkipKernel make_kernel(const CampaignModel& model, const SamplerConfig& s, double multiplier);

/// FNV-1a over the raw doubles, 16 hex digits.
std::string lambda_digest(const Vector& lambda);

struct CampaignOptions {
  bool resume = false;
  bool quiet = true;
};

struct CampaignSummary {
  std::uint64_t proposals = 0;
  std::uint64_t accepts = 0;
  std::uint64_t records = 0;
  std::uint64_t unique = 0;
  std::uint64_t oracle_calls = 0;
  std::uint64_t oracle_failures = 0;
  double acceptance_rate = 0;
  double pilot_acceptance = 0;
  double scale_multiplier = 1;
  double calibration_factor = 1;
  double wall_seconds = 0;
  std::vector<std::uint64_t> skips;
};

/// Run (or resume) the configured chains and write into cfg.output_dir:
/// records.jsonl, lambda0.jsonl, records.csv, summary.json, checkpoint.json
/// and protection.json (the thresholds in use).
CampaignSummary run_campaign(const CampaignConfig& cfg, const CampaignOptions& options = {});

/// Thresholds for a campaign: the configured file, or auto-calibration.
ProtectionConfig campaign_protection(const CampaignConfig& cfg, const GridCase& base, double* factor = nullptr);

}  // namespace cascade
