#include "cascade/analysis.hpp"

#include "json_util.hpp"

#include <iomanip>
#include <set>
#include <sstream>

namespace cascade {

using detail::json;

std::vector<RecordRow> parse_records(std::string_view text) {
  std::vector<RecordRow> rows;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string where = "records line " + std::to_string(line_no);
    json r;
    try {
      r = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where + ": " + e.what());
    }
    try {
      RecordRow row;
      row.id = r.at("id").get<std::uint64_t>();
      row.chain = r.at("chain").get<int>();
      row.unique = r.at("unique").get<bool>();
      row.state = r.value("state", row.id);
      const json& a = r.at("attack");
      row.scenario = a.at("scenario").get<int>();
      row.interval_s = a.at("interval_s").get<int>();
      row.gain = a.at("gain").get<double>();
      const json& m = r.at("metrics");
      row.x_mw = m.at("x_mw").get<double>();
      row.mu_mw = m.at("mu_mw").get<double>();
      row.nu = m.at("nu").get<double>();
      for (EventKind k : kAllEventKinds) {
        const std::string key(to_string(k));
        row.x_kind_mw[static_cast<std::size_t>(k)] = m.at("x_by_kind_mw").at(key).get<double>();
        row.counts[static_cast<std::size_t>(k)] = r.at("events").at("count").at(key).get<std::size_t>();
      }
      if (auto it = m.find("x_area_mw"); it != m.end()) {
        for (const auto& [area, kinds] : it->items()) {
          std::array<double, kEventKinds> v{};
          for (EventKind k : kAllEventKinds) v[static_cast<std::size_t>(k)] = kinds.at(std::string(to_string(k))).get<double>();
          row.area_mw[std::stoi(area)] = v;
        }
      }
      rows.push_back(std::move(row));
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return rows;
}

std::vector<RecordRow> read_records(const std::filesystem::path& path) {
  return parse_records(detail::read_text(path));
}

namespace {

struct Accumulator {
  std::size_t count = 0;
  double x = 0;
  std::array<double, kEventKinds> kind{};

  void add(const RecordRow& r) {
    ++count;
    x += r.x_mw;
    for (std::size_t k = 0; k < kEventKinds; ++k) kind[k] += r.x_kind_mw[k];
  }

  GroupMean mean() const {
    GroupMean g;
    g.count = count;
    if (count == 0) return g;
    const double n = static_cast<double>(count);
    g.x_mw = x / n;
    for (std::size_t k = 0; k < kEventKinds; ++k) g.kind_mw[k] = kind[k] / n;
    return g;
  }
};

/// Index of the half-open bin [edges[i], edges[i+1]) holding v; the last bin
/// is closed. -1 when outside.
long bin_of(double v, const std::vector<double>& edges) {
  const std::size_t n = edges.size();
  if (n < 2 || v < edges.front() || v > edges.back()) return -1;
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (v < edges[i + 1]) return static_cast<long>(i);
  return static_cast<long>(n - 2);
}

std::string num(double v) {
  std::ostringstream o;
  o << std::setprecision(12) << v;
  return o.str();
}

std::string kind_key(EventKind k) {
  std::string s(to_string(k));
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string group_header() {
  std::string h = "count,x_mw";
  for (EventKind k : kAllEventKinds)
    if (k != EventKind::line) h += "," + kind_key(k) + "_mw";
  return h;
}

std::string group_fields(const GroupMean& g) {
  if (g.count == 0) return "0,,,,";
  std::string s = std::to_string(g.count) + "," + num(g.x_mw);
  for (EventKind k : kAllEventKinds)
    if (k != EventKind::line) s += "," + num(g.kind_mw[static_cast<std::size_t>(k)]);
  return s;
}

}  // namespace

Analysis analyze(const std::vector<RecordRow>& records, const AnalysisOptions& options) {
  if (records.empty()) throw ValidationError("analyze: no accepted samples in the record set");
  Analysis out;

  std::set<int> areas;
  for (const RecordRow& r : records)
    for (const auto& [a, v] : r.area_mw) areas.insert(a);
  out.area.records = records.size();
  for (int a : areas) {
    std::array<double, kEventKinds> sum{};
    for (const RecordRow& r : records)
      if (auto it = r.area_mw.find(a); it != r.area_mw.end())
        for (std::size_t k = 0; k < kEventKinds; ++k) sum[k] += it->second[k];
    for (double& v : sum) v /= static_cast<double>(records.size());
    out.area.areas.push_back(a);
    out.area.mean_mw.push_back(sum);
  }

  std::vector<double> nu_edges;
  for (int k = 0; k <= 10; ++k) nu_edges.push_back(k / 10.0);
  std::vector<Accumulator> nu_acc(10);
  for (const RecordRow& r : records)
    if (long b = bin_of(r.nu, nu_edges); b >= 0) nu_acc[static_cast<std::size_t>(b)].add(r);
  for (std::size_t k = 0; k < 10; ++k) {
    out.nu.lo.push_back(nu_edges[k]);
    out.nu.hi.push_back(nu_edges[k + 1]);
    out.nu.bins.push_back(nu_acc[k].mean());
  }

  HeatmapTable& h = out.heatmap;
  h.interval_edges = options.interval_edges;
  double mu_max = 0;
  for (const RecordRow& r : records) mu_max = std::max(mu_max, r.mu_mw / 1000.0);
  if (!(mu_max > 0)) mu_max = 1e-9;
  const std::size_t mb = std::max<std::size_t>(1, options.mu_bins);
  for (std::size_t k = 0; k <= mb; ++k) h.mu_edges_gw.push_back(mu_max * static_cast<double>(k) / static_cast<double>(mb));
  const std::size_t rows = h.interval_edges.size() > 1 ? h.interval_edges.size() - 1 : 0;
  std::vector<Accumulator> cells(rows * mb);
  for (const RecordRow& r : records) {
    const long i = bin_of(r.interval_s, h.interval_edges);
    const long j = bin_of(r.mu_mw / 1000.0, h.mu_edges_gw);
    if (i >= 0 && j >= 0) cells[static_cast<std::size_t>(i) * mb + static_cast<std::size_t>(j)].add(r);
  }
  for (const Accumulator& a : cells) h.cells.push_back(a.mean());

  std::map<int, Accumulator> by_tau;
  for (const RecordRow& r : records) by_tau[r.scenario].add(r);
  for (const auto& [t, a] : by_tau) {
    out.tau.tau.push_back(t);
    out.tau.groups.push_back(a.mean());
  }
  return out;
}

std::string area_csv(const AreaTable& t) {
  std::string s = "area,records";
  for (EventKind k : kAllEventKinds)
    if (k != EventKind::line) s += "," + kind_key(k) + "_mw";
  s += ",x_mw\n";
  for (std::size_t i = 0; i < t.areas.size(); ++i) {
    s += std::to_string(t.areas[i]) + "," + std::to_string(t.records);
    double total = 0;
    for (EventKind k : kAllEventKinds) {
      if (k == EventKind::line) continue;
      s += "," + num(t.mean_mw[i][static_cast<std::size_t>(k)]);
      total += t.mean_mw[i][static_cast<std::size_t>(k)];
    }
    s += "," + num(total) + "\n";
  }
  return s;
}

std::string nu_csv(const BinTable& t) {
  std::string s = "nu_lo,nu_hi," + group_header() + "\n";
  for (std::size_t i = 0; i < t.bins.size(); ++i)
    s += num(t.lo[i]) + "," + num(t.hi[i]) + "," + group_fields(t.bins[i]) + "\n";
  return s;
}

std::string heatmap_csv(const HeatmapTable& t) {
  std::string s = "interval_lo_s,interval_hi_s,mu_lo_gw,mu_hi_gw," + group_header() + "\n";
  const std::size_t cols = t.mu_edges_gw.size() - 1;
  for (std::size_t i = 0; i + 1 < t.interval_edges.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j)
      s += num(t.interval_edges[i]) + "," + num(t.interval_edges[i + 1]) + "," + num(t.mu_edges_gw[j]) + "," +
           num(t.mu_edges_gw[j + 1]) + "," + group_fields(t.at(i, j)) + "\n";
  return s;
}

std::string tau_csv(const TauTable& t) {
  std::string s = "tau,label," + group_header() + ",ufls_share\n";
  for (std::size_t i = 0; i < t.tau.size(); ++i) {
    const GroupMean& g = t.groups[i];
    const double share = g.x_mw > 0 ? g.kind_mw[static_cast<std::size_t>(EventKind::ufls)] / g.x_mw : 0.0;
    s += std::to_string(t.tau[i]) + "," + std::string(kScenarioLabels.at(static_cast<std::size_t>(t.tau[i] - 1))) +
         "," + group_fields(g) + "," + num(share) + "\n";
  }
  return s;
}

void write_tables(const Analysis& a, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  detail::write_text(dir / "area.csv", area_csv(a.area));
  detail::write_text(dir / "nu.csv", nu_csv(a.nu));
  detail::write_text(dir / "heatmap.csv", heatmap_csv(a.heatmap));
  detail::write_text(dir / "tau.csv", tau_csv(a.tau));
}

}  // namespace cascade
