#pragma once

#include "cascade/protection.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace cascade {

/// Scalar view of one records.jsonl row.
struct RecordRow {
  std::uint64_t id = 0;
  int chain = 0;
  bool unique = false;
  std::uint64_t state = 0;  ///< id of the chain state, keys lambda0.jsonl
  int scenario = 0;
  int interval_s = 0;
  double gain = 0;
  double mu_mw = 0;
  double nu = 0;
  double x_mw = 0;
  std::array<double, kEventKinds> x_kind_mw{};
  std::array<std::size_t, kEventKinds> counts{};
  std::map<int, std::array<double, kEventKinds>> area_mw;
};

std::vector<RecordRow> parse_records(std::string_view jsonl);
std::vector<RecordRow> read_records(const std::filesystem::path& path);

/// Mean cascade size over a group of records, split by kind (LINE is always 0).
struct GroupMean {
  std::size_t count = 0;
  double x_mw = 0;
  std::array<double, kEventKinds> kind_mw{};
};

struct AreaTable {
  std::vector<int> areas;
  std::vector<std::array<double, kEventKinds>> mean_mw;  ///< per area, mean over all records
  std::size_t records = 0;
};

struct BinTable {
  std::vector<double> lo, hi;
  std::vector<GroupMean> bins;
};

/// Interval bins (rows) by mu bins in GW (columns).
struct HeatmapTable {
  std::vector<double> interval_edges;
  std::vector<double> mu_edges_gw;
  std::vector<GroupMean> cells;  ///< row-major

  const GroupMean& at(std::size_t row, std::size_t col) const { return cells[row * (mu_edges_gw.size() - 1) + col]; }
};

struct TauTable {
  std::vector<int> tau;
  std::vector<GroupMean> groups;
};

struct Analysis {
  AreaTable area;
  BinTable nu;
  HeatmapTable heatmap;
  TauTable tau;
};

struct AnalysisOptions {
  std::vector<double> interval_edges{1, 10, 20, 30, 40, 50, 61};  ///< s; last bin closed
  std::size_t mu_bins = 10;
};

/// Throws ValidationError on an empty record set.
Analysis analyze(const std::vector<RecordRow>& records, const AnalysisOptions& options = {});

/// area.csv, nu.csv, heatmap.csv, tau.csv.
void write_tables(const Analysis& analysis, const std::filesystem::path& dir);
std::string area_csv(const AreaTable& t);
std::string nu_csv(const BinTable& t);
std::string heatmap_csv(const HeatmapTable& t);
std::string tau_csv(const TauTable& t);

}  // namespace cascade
