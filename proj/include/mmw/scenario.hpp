#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mmw/antenna.hpp"
#include "mmw/rng.hpp"
#include "mmw/sim_config.hpp"

namespace mmw {

/// Serving id of a UE that has no usable mmWave link.
constexpr int kOutage = -1;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct GnbNode {
  int id = 0;
  Vec3 position{};
  int n_sectors = 1;
  std::vector<ArrayConfig> sectors;
  double tx_power_dbm = 30.0;
};

struct UeNode {
  int id = 0;
  Vec3 position{};
  double vx = 0.0;
  double vy = 0.0;
  double speed_mps = 0.0;
  double orientation_deg = 0.0;
  int n_panels = 1;
  std::vector<ArrayConfig> panels;
  int serving = kOutage;
  double source_rate_bps = 0.0;
};

struct Bounds {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  bool contains(const Vec3& p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }
};

struct Deployment {
  double side_d = 0.0;
  std::vector<GnbNode> gnbs;
  std::vector<UeNode> ues;
  Bounds bounds{};
  double time_s = 0.0;
  double walk_epoch_s = 1.0;
};

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

inline double distance_2d(const Vec3& a, const Vec3& b) { return std::hypot(b.x - a.x, b.y - a.y); }

inline double distance_3d(const Vec3& a, const Vec3& b) {
  return std::sqrt((b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y) + (b.z - a.z) * (b.z - a.z));
}

/// World-frame azimuth of b as seen from a, in [0, 360).
inline double azimuth_to(const Vec3& from, const Vec3& to) {
  return wrap_360(rad_to_deg(std::atan2(to.y - from.y, to.x - from.x)));
}

/// World-frame direction of b as seen from a.
inline Direction direction_to(const Vec3& from, const Vec3& to) {
  const double d = distance_3d(from, to);
  const double theta = d > 0.0 ? rad_to_deg(std::acos(std::clamp((to.z - from.z) / d, -1.0, 1.0))) : 90.0;
  return {theta, wrap_180(azimuth_to(from, to))};
}

inline std::vector<ArrayConfig> oriented_arrays(const ArrayConfig& base, int n, double offset_deg) {
  std::vector<ArrayConfig> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ArrayConfig c = base;
    c.boresight_azimuth_deg = sector_boresight(n, i, offset_deg);
    out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Five gNBs (four square corners, one centre) and uniformly placed UEs with
/// uniform random headings and speeds.
inline Deployment build_deployment(const SimConfig& cfg, const StreamFactory& streams) {
  if (!(cfg.d_m >= 50.0 && cfg.d_m <= 500.0)) throw std::invalid_argument("d must be in [50, 500] m");
  if (cfg.n_ue < 1) throw std::invalid_argument("n_ue must be >= 1");
  const double d = cfg.d_m;
  Deployment dep;
  dep.side_d = d;
  dep.bounds = {0.0, d, 0.0, d};
  dep.walk_epoch_s = cfg.walk_epoch_s;
  const std::pair<double, double> sites[] = {{0.0, 0.0}, {d, 0.0}, {0.0, d}, {d, d}, {d / 2.0, d / 2.0}};
  int id = 0;
  for (const auto& [x, y] : sites) {
    GnbNode g;
    g.id = id++;
    g.position = {x, y, cfg.gnb_height_m};
    g.n_sectors = cfg.n_sectors;
    g.sectors = oriented_arrays(cfg.gnb_array, cfg.n_sectors, 0.0);
    g.tx_power_dbm = cfg.tx_power_dbm;
    dep.gnbs.push_back(std::move(g));
  }
  for (int i = 0; i < cfg.n_ue; ++i) {
    auto rng = streams.stream(StreamTag::placement, static_cast<std::uint64_t>(i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    UeNode ue;
    ue.id = i;
    ue.position = {d * unit(rng), d * unit(rng), cfg.ue_height_m};
    ue.speed_mps = cfg.ue_speed_min_mps + (cfg.ue_speed_max_mps - cfg.ue_speed_min_mps) * unit(rng);
    const double heading = 2.0 * kPi * unit(rng);
    ue.vx = ue.speed_mps * std::cos(heading);
    ue.vy = ue.speed_mps * std::sin(heading);
    ue.orientation_deg = 360.0 * unit(rng);
    ue.n_panels = cfg.n_panels;
    ue.panels = oriented_arrays(cfg.ue_array, cfg.n_panels, ue.orientation_deg);
    ue.source_rate_bps = cfg.source_rate_bps;
    dep.ues.push_back(std::move(ue));
  }
  return dep;
}

namespace detail {

inline void reflect(double& pos, double& vel, double lo, double hi) {
  // Fold until inside; a single step can cross the box at most a few times.
  while (pos < lo || pos > hi) {
    if (pos < lo) pos = 2.0 * lo - pos;
    if (pos > hi) pos = 2.0 * hi - pos;
    vel = -vel;
  }
}

inline void advance(UeNode& ue, const Bounds& b, double dt) {
  ue.position.x += ue.vx * dt;
  ue.position.y += ue.vy * dt;
  reflect(ue.position.x, ue.vx, b.x_min, b.x_max);
  reflect(ue.position.y, ue.vy, b.y_min, b.y_max);
}

}  // namespace detail

/// Reflecting 2D random walk. Each UE keeps its speed; its heading is redrawn
/// at every multiple of the walk epoch from a stream keyed by (ue, epoch).
inline Deployment step_mobility(Deployment dep, double dt, const StreamFactory& streams) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  const double t0 = dep.time_s;
  const double t1 = t0 + dt;
  const double epoch = dep.walk_epoch_s;
  // Epoch indices are snapped so that accumulated step times that land a hair
  // short of a boundary still count as crossing it.
  const auto k_first = static_cast<std::int64_t>(std::floor(t0 / epoch + 1e-9));
  const auto k_last = static_cast<std::int64_t>(std::floor(t1 / epoch + 1e-9));
  for (UeNode& ue : dep.ues) {
    double t = t0;
    for (std::int64_t k = k_first + 1; k <= k_last; ++k) {
      const double boundary = std::clamp(static_cast<double>(k) * epoch, t, t1);
      detail::advance(ue, dep.bounds, boundary - t);
      t = boundary;
      auto rng = streams.stream(StreamTag::mobility, static_cast<std::uint64_t>(ue.id), static_cast<std::uint64_t>(k));
      const double heading = std::uniform_real_distribution<double>(0.0, 2.0 * kPi)(rng);
      ue.vx = ue.speed_mps * std::cos(heading);
      ue.vy = ue.speed_mps * std::sin(heading);
    }
    detail::advance(ue, dep.bounds, t1 - t);
  }
  dep.time_s = t1;
  return dep;
}

struct PanelSector {
  int panel = 0;
  int sector = 0;
};

/// The gNB sector facing the UE and the UE panel facing the gNB.
inline PanelSector select_panel_and_sector(const UeNode& ue, const GnbNode& gnb) {
  if (distance_2d(ue.position, gnb.position) == 0.0)
    throw std::invalid_argument("select_panel_and_sector: UE and gNB share a horizontal position");
  const double az = azimuth_to(gnb.position, ue.position);
  return {sector_for_direction(ue.n_panels, az + 180.0, ue.orientation_deg), sector_for_direction(gnb.n_sectors, az)};
}

/// SINR in dB, indexed [ue][gnb].
using SinrTable = std::vector<std::vector<double>>;

/// Serve each UE from its best gNB, subject to the outage threshold and a
/// handover hysteresis relative to the current serving gNB.
inline Deployment associate(Deployment dep, const SinrTable& sinr_db, double outage_db, double hysteresis_db) {
  if (sinr_db.empty() || sinr_db.size() != dep.ues.size())
    throw std::invalid_argument("associate: SINR table must have one row per UE");
  for (std::size_t u = 0; u < dep.ues.size(); ++u) {
    const auto& row = sinr_db[u];
    if (row.size() != dep.gnbs.size() || row.empty())
      throw std::invalid_argument("associate: SINR row must have one entry per gNB");
    const auto best_it = std::max_element(row.begin(), row.end());
    const int best = static_cast<int>(best_it - row.begin());
    UeNode& ue = dep.ues[u];
    if (*best_it < outage_db) {
      ue.serving = kOutage;
      continue;
    }
    if (ue.serving != kOutage) {
      const double current = row[static_cast<std::size_t>(ue.serving)];
      if (current >= outage_db && *best_it <= current + hysteresis_db) continue;
    }
    ue.serving = best;
  }
  return dep;
}

}  // namespace mmw
