#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <thread>
#include <utility>
#include <vector>

#include "mmw/antenna.hpp"
#include "mmw/config_io.hpp"
#include "mmw/engine.hpp"
#include "mmw/sim_config.hpp"

namespace mmw {

/// One swept parameter: a top-level SimConfig key and the values it takes.
struct SweepAxis {
  std::string name;
  std::vector<ojson> values;

  bool operator==(const SweepAxis&) const = default;
};

constexpr std::uint64_t kDefaultMaxRuns = 10000;

/// A base configuration, the cross product of its sweep axes, and `seeds`
/// consecutive seeds starting at base.seed for every sweep point.
struct Campaign {
  SimConfig base{};
  // Absent: the base configuration is the single sweep point. Present: the
  // cross product of the axes, which is empty if there are no axes.
  std::optional<std::vector<SweepAxis>> sweep;
  std::uint64_t seeds = 1;
  std::string output_dir;
  std::uint64_t max_runs = kDefaultMaxRuns;

  bool operator==(const Campaign&) const = default;
};

// Keys that are not SimConfig parameters or are structured objects.
inline bool sweepable(const std::string& key) {
  static const ojson defaults = to_json(SimConfig{});
  const auto it = defaults.find(key);
  return it != defaults.end() && !it->is_object() && key != "seed";
}

// ---------------------------------------------------------------------------
// Parsing and serialization
// ---------------------------------------------------------------------------

inline ojson to_json(const Campaign& c) {
  ojson j = to_json(c.base);
  if (c.sweep) {
    ojson s = ojson::object();
    for (const SweepAxis& a : *c.sweep) s[a.name] = a.values;
    j["sweep"] = std::move(s);
  }
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir;
  j["max_runs"] = c.max_runs;
  return j;
}

inline std::string serialize(const Campaign& c) { return to_json(c).dump(2) + "\n"; }

inline std::uint64_t planned_runs(const Campaign& c);

inline Campaign campaign_from_json(const ojson& j) {
  Campaign c;
  detail::ObjectReader r(j, "");
  r.read("seeds", c.seeds);
  r.read("output_dir", c.output_dir);
  r.read("max_runs", c.max_runs);
  if (const ojson* s = r.find("sweep")) {
    if (!s->is_object()) r.fail("sweep", "expected an object of parameter -> value list");
    std::vector<SweepAxis> axes;
    for (const auto& [name, values] : s->items()) {
      const std::string field = "sweep." + name;
      if (!sweepable(name))
        throw ConfigError(ConfigError::Kind::validation, "field '" + field + "': not a sweepable parameter");
      if (!values.is_array())
        throw ConfigError(ConfigError::Kind::validation, "field '" + field + "': expected a list of values");
      axes.push_back({name, std::vector<ojson>(values.begin(), values.end())});
    }
    c.sweep = std::move(axes);
  }
  read_into(r, c.base);
  r.finish();
  validate_config(c.base);
  if (c.max_runs < 1) r.fail("max_runs", "must be >= 1");
  // Every sweep value must produce a valid configuration on its own.
  if (c.sweep) {
    for (const SweepAxis& a : *c.sweep) {
      for (const ojson& v : a.values) {
        ojson probe = to_json(c.base);
        probe[a.name] = v;
        try {
          (void)sim_config_from_json(probe);
        } catch (const ConfigError& e) {
          throw ConfigError(ConfigError::Kind::validation, "field 'sweep." + a.name + "' value " + v.dump() + ": " +
                                                               e.what());
        }
      }
    }
  }
  const std::uint64_t runs = planned_runs(c);
  if (runs > c.max_runs)
    r.fail("max_runs", std::to_string(runs) + " runs planned, cap is " + std::to_string(c.max_runs));
  return c;
}

inline Campaign parse_config_text(const std::string& text, const std::string& source = "<config>") {
  return campaign_from_json(parse_json_text(text, source));
}

inline Campaign parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(ConfigError::Kind::parse, path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

// ---------------------------------------------------------------------------
// Planning
// ---------------------------------------------------------------------------

struct SweepPoint {
  std::size_t index = 0;
  ojson assignments = ojson::object();  // axis name -> value
  SimConfig config{};
};

inline std::uint64_t planned_points(const Campaign& c) {
  if (!c.sweep) return 1;
  if (c.sweep->empty()) return 0;
  std::uint64_t n = 1;
  for (const SweepAxis& a : *c.sweep) {
    n *= a.values.size();
    if (n > (std::uint64_t{1} << 40)) return n;  // far past any cap; stop before overflow
  }
  return n;
}

inline std::uint64_t planned_runs(const Campaign& c) {
  const std::uint64_t p = planned_points(c);
  if (p != 0 && c.seeds > (std::uint64_t{1} << 62) / p) return UINT64_MAX;
  return p * c.seeds;
}

/// Sweep points in row-major order over the axes (last axis fastest).
inline std::vector<SweepPoint> plan_points(const Campaign& c) {
  std::vector<SweepPoint> out;
  const std::uint64_t n = planned_points(c);
  if (planned_runs(c) > c.max_runs)
    throw ConfigError(ConfigError::Kind::validation, "field 'max_runs': " + std::to_string(planned_runs(c)) +
                                                         " runs planned, cap is " + std::to_string(c.max_runs));
  for (std::uint64_t i = 0; i < n; ++i) {
    SweepPoint p;
    p.index = static_cast<std::size_t>(i);
    ojson j = to_json(c.base);
    if (c.sweep) {
      std::uint64_t rest = i;
      std::vector<std::size_t> pick(c.sweep->size());
      for (std::size_t a = c.sweep->size(); a-- > 0;) {
        const std::size_t len = (*c.sweep)[a].values.size();
        pick[a] = static_cast<std::size_t>(rest % len);
        rest /= len;
      }
      for (std::size_t a = 0; a < c.sweep->size(); ++a) {
        const SweepAxis& axis = (*c.sweep)[a];
        p.assignments[axis.name] = axis.values[pick[a]];
        j[axis.name] = axis.values[pick[a]];
      }
    }
    p.config = sim_config_from_json(j);
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<std::uint64_t> campaign_seeds(const Campaign& c) {
  std::vector<std::uint64_t> s;
  for (std::uint64_t k = 0; k < c.seeds; ++k) s.push_back(c.base.seed + k);
  return s;
}

// ---------------------------------------------------------------------------
// Output formats
// ---------------------------------------------------------------------------

/// Shortest decimal text that reads back as the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline constexpr const char* kRecordsHeader =
    "time_s,ue_id,serving_gnb,sinr_db,offered_rate_bps,achieved_rate_bps,handover,beamformed_gain_db";

inline void write_records_csv(std::ostream& os, const std::vector<MetricsRecord>& records) {
  os << kRecordsHeader << '\n';
  for (const MetricsRecord& r : records) {
    os << format_double(r.time_s) << ',' << r.ue_id << ',';
    if (r.serving == kOutage)
      os << "OUTAGE";
    else
      os << r.serving;
    os << ',' << format_double(r.sinr_db) << ',' << format_double(r.offered_rate_bps) << ','
       << format_double(r.achieved_rate_bps) << ',' << (r.handover ? 1 : 0) << ','
       << format_double(r.beamformed_gain_db) << '\n';
  }
}

inline ojson nullable(double v, bool present) { return present ? ojson(v) : ojson(nullptr); }

inline ojson to_json(const RunSummary& s) {
  const bool connected = !s.sinr_cdf.empty();
  ojson cdf = ojson::array();
  for (const auto& [p, v] : s.sinr_cdf) cdf.push_back({{"percentile", p}, {"sinr_db", v}});
  return {{"n_steps", s.n_steps},
          {"n_ues", s.n_ues},
          {"mean_throughput_bps", s.mean_throughput_bps},
          {"mean_throughput_connected_bps", nullable(s.mean_throughput_connected_bps, connected)},
          {"p10_throughput_bps", s.p10_throughput_bps},
          {"ue_mean_throughput_bps", s.ue_mean_throughput_bps},
          {"mean_sinr_db", nullable(s.mean_sinr_db, connected)},
          {"mean_sinr_all_db", s.mean_sinr_all_db},
          {"sinr_cdf", std::move(cdf)},
          {"outage_fraction", s.outage_fraction},
          {"handover_count", s.handover_count},
          {"mean_beamformed_gain_db", s.mean_beamformed_gain_db},
          {"max_gnb_rate_bps", s.max_gnb_rate_bps},
          {"max_ue_rate_bps", s.max_ue_rate_bps}};
}

/// Per-run quantities kept by the campaign for pooling across seeds.
struct RunOutcome {
  std::uint64_t seed = 0;
  std::string records_file;  // relative to the output directory
  RunSummary summary;
  std::vector<double> connected_sinr_db;
  bool rates_within_caps = true;
};

/// Summary of one sweep point pooled over its seeds.
inline ojson point_summary(const SweepPoint& p, const std::vector<RunOutcome>& runs) {
  std::vector<double> ue_means, sinr;
  double thr = 0.0, thr_conn = 0.0, sinr_all = 0.0, outage = 0.0, gain = 0.0, max_gnb = 0.0, max_ue = 0.0;
  int handovers = 0, n_conn_runs = 0;
  bool within_caps = true;
  ojson per_run = ojson::array();
  for (const RunOutcome& r : runs) {
    const RunSummary& s = r.summary;
    ue_means.insert(ue_means.end(), s.ue_mean_throughput_bps.begin(), s.ue_mean_throughput_bps.end());
    sinr.insert(sinr.end(), r.connected_sinr_db.begin(), r.connected_sinr_db.end());
    thr += s.mean_throughput_bps;
    if (!s.sinr_cdf.empty()) {
      thr_conn += s.mean_throughput_connected_bps;
      ++n_conn_runs;
    }
    sinr_all += s.mean_sinr_all_db;
    outage += s.outage_fraction;
    gain += s.mean_beamformed_gain_db;
    handovers += s.handover_count;
    max_gnb = std::max(max_gnb, s.max_gnb_rate_bps);
    max_ue = std::max(max_ue, s.max_ue_rate_bps);
    within_caps = within_caps && r.rates_within_caps;
    ojson jr = to_json(s);
    jr.erase("ue_mean_throughput_bps");
    jr.erase("sinr_cdf");
    ojson entry = {{"seed", r.seed}, {"records", r.records_file}};
    entry.update(jr);
    per_run.push_back(std::move(entry));
  }
  const double n = runs.empty() ? 1.0 : static_cast<double>(runs.size());
  std::sort(ue_means.begin(), ue_means.end());
  std::sort(sinr.begin(), sinr.end());
  double sinr_mean = 0.0;
  for (double v : sinr) sinr_mean += v;
  ojson cdf = ojson::array();
  if (!sinr.empty())
    for (int pc = 1; pc <= 99; ++pc) cdf.push_back({{"percentile", pc}, {"sinr_db", percentile(sinr, pc)}});
  ojson seeds = ojson::array();
  for (const RunOutcome& r : runs) seeds.push_back(r.seed);
  return {{"point", p.index},
          {"assignments", p.assignments},
          {"seeds", std::move(seeds)},
          {"n_runs", runs.size()},
          {"mean_throughput_bps", thr / n},
          {"mean_throughput_connected_bps", nullable(thr_conn / std::max(n_conn_runs, 1), n_conn_runs > 0)},
          {"p10_throughput_bps", percentile(ue_means, 10.0)},
          {"mean_sinr_db", nullable(sinr_mean / static_cast<double>(std::max<std::size_t>(sinr.size(), 1)), !sinr.empty())},
          {"mean_sinr_all_db", sinr_all / n},
          {"sinr_cdf", std::move(cdf)},
          {"outage_fraction", outage / n},
          {"handover_count", handovers},
          {"mean_beamformed_gain_db", gain / n},
          {"max_gnb_rate_bps", max_gnb},
          {"max_ue_rate_bps", max_ue},
          {"rates_within_caps", within_caps},
          {"config", to_json(p.config)},
          {"runs", std::move(per_run)}};
}

// ---------------------------------------------------------------------------
// Campaign execution
// ---------------------------------------------------------------------------

enum class CampaignStatus { success, partial };

struct CampaignResult {
  CampaignStatus status = CampaignStatus::success;
  std::filesystem::path manifest;
  ojson manifest_json;
  std::vector<std::string> errors;
};

struct RunOptions {
  unsigned workers = 0;  // 0: hardware concurrency
  const std::atomic<bool>* cancel = nullptr;
};

inline std::string point_dir_name(std::size_t index) {
  std::string s = std::to_string(index);
  return "point_" + std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  out.close();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline bool cancelled(const RunOptions& opt) { return opt.cancel && opt.cancel->load(std::memory_order_relaxed); }

// Runs one simulation, stepping so that a cancel request stops it early.
inline std::optional<RunResult> run_cancellable(const SimConfig& cfg, const RunOptions& opt) {
  Simulator sim(cfg);
  while (!sim.done()) {
    if (cancelled(opt)) return std::nullopt;
    sim.step();
  }
  return RunResult{sim.records(), sim.summary()};
}

}  // namespace detail

/// Runs every (sweep point, seed) pair, writing
///   <out>/point_NNNN/seed_S.csv   records of one run
///   <out>/point_NNNN/summary.json pooled summary of a completed point
///   <out>/manifest.json           configs, seeds, produced files, completeness
/// Output paths depend only on (point, seed), so worker scheduling does not
/// affect them. Throws only if the manifest itself cannot be written.
inline CampaignResult run_campaign(const Campaign& c, const RunOptions& opt = {}) {
  namespace fs = std::filesystem;
  const std::vector<SweepPoint> points = plan_points(c);
  const std::vector<std::uint64_t> seeds = campaign_seeds(c);
  const fs::path out_dir = c.output_dir.empty() ? fs::path(".") : fs::path(c.output_dir);
  fs::create_directories(out_dir);

  struct Job {
    std::size_t point;
    std::size_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < points.size(); ++p)
    for (std::size_t s = 0; s < seeds.size(); ++s) jobs.push_back({p, s});

  std::vector<std::optional<RunOutcome>> outcomes(jobs.size());
  std::vector<std::string> errors;
  std::mutex errors_mutex;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size() || detail::cancelled(opt)) return;
      const SweepPoint& pt = points[jobs[j].point];
      SimConfig cfg = pt.config;
      cfg.seed = seeds[jobs[j].seed];
      const std::string rel = point_dir_name(pt.index) + "/seed_" + std::to_string(cfg.seed) + ".csv";
      try {
        std::optional<RunResult> res = detail::run_cancellable(cfg, opt);
        if (!res) return;
        fs::create_directories(out_dir / point_dir_name(pt.index));
        std::ostringstream csv;
        write_records_csv(csv, res->records);
        detail::write_file(out_dir / rel, csv.str());
        RunOutcome o;
        o.seed = cfg.seed;
        o.records_file = rel;
        o.summary = res->summary;
        for (const MetricsRecord& r : res->records)
          if (r.serving != kOutage) o.connected_sinr_db.push_back(r.sinr_db);
        o.rates_within_caps =
            res->summary.max_gnb_rate_bps <= cfg.max_phy_rate_bps && res->summary.max_ue_rate_bps <= cfg.source_rate_bps;
        outcomes[j] = std::move(o);
      } catch (const std::exception& e) {
        std::lock_guard lock(errors_mutex);
        errors.push_back(rel + ": " + e.what());
      }
    }
  };

  unsigned n_workers = opt.workers ? opt.workers : std::max(1u, std::thread::hardware_concurrency());
  n_workers = static_cast<unsigned>(std::min<std::size_t>(n_workers, std::max<std::size_t>(jobs.size(), 1)));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }

  ojson files = ojson::array();
  ojson point_entries = ojson::array();
  bool all_complete = true;
  std::size_t completed_runs = 0;
  for (std::size_t p = 0; p < points.size(); ++p) {
    std::vector<RunOutcome> done;
    ojson runs = ojson::array();
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const auto& o = outcomes[p * seeds.size() + s];
      ojson run = {{"seed", seeds[s]}, {"complete", o.has_value()}};
      run["records"] = o ? ojson(o->records_file) : ojson(nullptr);
      if (o) {
        files.push_back(o->records_file);
        done.push_back(*o);
        ++completed_runs;
      }
      runs.push_back(std::move(run));
    }
    const bool complete = done.size() == seeds.size();
    ojson summary_file = nullptr;
    if (complete) {
      const std::string rel = point_dir_name(points[p].index) + "/summary.json";
      try {
        fs::create_directories(out_dir / point_dir_name(points[p].index));
        detail::write_file(out_dir / rel, point_summary(points[p], done).dump(2) + "\n");
        summary_file = rel;
        files.push_back(rel);
      } catch (const std::exception& e) {
        errors.push_back(rel + ": " + e.what());
      }
    }
    const bool point_ok = complete && !summary_file.is_null();
    all_complete = all_complete && point_ok;
    point_entries.push_back({{"point", points[p].index},
                             {"assignments", points[p].assignments},
                             {"complete", point_ok},
                             {"summary", summary_file},
                             {"config", to_json(points[p].config)},
                             {"runs", std::move(runs)}});
  }

  ojson seed_list = seeds;
  CampaignResult result;
  result.status = all_complete ? CampaignStatus::success : CampaignStatus::partial;
  result.errors = errors;
  std::sort(result.errors.begin(), result.errors.end());
  result.manifest_json = {{"complete", all_complete},
                          {"cancelled", detail::cancelled(opt)},
                          {"n_points", points.size()},
                          {"n_runs_planned", jobs.size()},
                          {"n_runs_completed", completed_runs},
                          {"seeds", std::move(seed_list)},
                          {"campaign", to_json(c)},
                          {"points", std::move(point_entries)},
                          {"files", std::move(files)},
                          {"errors", result.errors}};
  result.manifest = out_dir / "manifest.json";
  detail::write_file(result.manifest, result.manifest_json.dump(2) + "\n");
  return result;
}

// ---------------------------------------------------------------------------
// Pattern export
// ---------------------------------------------------------------------------

/// Composite gain (element pattern plus array factor, dB) of an array steered
/// toward a local direction, on a theta x phi grid with the given step.
inline void export_pattern(std::ostream& os, const ArrayConfig& cfg, const Direction& steer, double resolution_deg) {
  validate(cfg);
  if (!(resolution_deg > 0.0) || !std::isfinite(resolution_deg))
    throw std::invalid_argument("resolution must be > 0 degrees");
  const double cells = 360.0 / resolution_deg;
  if (std::abs(cells - std::round(cells)) > 1e-9)
    throw std::invalid_argument("resolution must divide 360 degrees");
  if (!(steer.theta >= 0.0 && steer.theta <= 180.0) || !(steer.phi >= -180.0 && steer.phi <= 180.0))
    throw std::invalid_argument("steering direction outside theta [0, 180], phi [-180, 180]");
  const SteeringVector w = steering_vector(cfg, steer);
  const auto n_phi = static_cast<long>(std::llround(cells));
  const auto n_theta = static_cast<long>(std::floor(180.0 / resolution_deg + 1e-9));
  os << "theta_deg,phi_deg,gain_db\n";
  for (long i = 0; i <= n_theta; ++i) {
    const double theta = std::min(180.0, static_cast<double>(i) * resolution_deg);
    for (long k = 0; k <= n_phi; ++k) {
      const double phi = std::clamp(-180.0 + static_cast<double>(k) * resolution_deg, -180.0, 180.0);
      os << format_double(theta) << ',' << format_double(phi) << ','
         << format_double(array_radiation_pattern(cfg, w, {theta, phi})) << '\n';
    }
  }
}

}  // namespace mmw
