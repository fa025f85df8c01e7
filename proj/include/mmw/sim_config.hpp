#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "mmw/antenna.hpp"
#include "mmw/channel.hpp"

namespace mmw {

enum class BeamformingMode { los_steering, optimal_isotropic };

inline std::string to_string(BeamformingMode m) {
  return m == BeamformingMode::los_steering ? "los_steering" : "optimal_isotropic";
}

inline BeamformingMode beamforming_from_string(const std::string& s) {
  if (s == "los_steering") return BeamformingMode::los_steering;
  if (s == "optimal_isotropic") return BeamformingMode::optimal_isotropic;
  throw std::invalid_argument("unknown beamforming mode '" + s + "' (expected los_steering or optimal_isotropic)");
}

/// Parameters of one simulation run. Defaults follow the reference
/// deployment: 28 GHz, 1 GHz bandwidth, 3 gNB sectors with 8x8 arrays,
/// 2 UE panels with 4x4 arrays, 100 Mbit/s constant-rate sources.
struct SimConfig {
  ScenarioKind scenario = ScenarioKind::UMi;
  double d_m = 100.0;
  int n_ue = 25;
  int n_sectors = 3;
  int n_panels = 2;
  ArrayConfig gnb_array{8, 8, 0.5, 0.5, gnb_element(), 0.0, 90.0};
  ArrayConfig ue_array{4, 4, 0.5, 0.5, ue_element(), 0.0, 90.0};
  double bandwidth_hz = 1e9;
  double carrier_hz = 28e9;
  double noise_figure_db = 7.0;
  double outage_db = -5.0;
  double max_phy_rate_bps = 3.2e9;
  double source_rate_bps = 1e8;
  double spectral_efficiency = 0.6;
  double sim_duration_s = 10.0;
  double step_dt_s = 0.1;
  std::uint64_t seed = 1;
  BeamformingMode beamforming = BeamformingMode::los_steering;
  double gnb_height_m = 10.0;
  double ue_height_m = 1.5;
  double tx_power_dbm = 30.0;
  double hysteresis_db = 3.0;
  double walk_epoch_s = 1.0;
  double coherence_period_s = 0.1;
  double los_update_period_s = 1.0;
  double ue_speed_min_mps = 2.0;
  double ue_speed_max_mps = 4.0;
  double gnb_zeta_deg = 0.0;
  double ue_zeta_deg = 0.0;
  ScenarioProfile umi = umi_profile();
  ScenarioProfile uma = uma_profile();

  /// Channel profile for the configured scenario at the configured carrier.
  ScenarioProfile profile() const {
    ScenarioProfile p = scenario == ScenarioKind::UMi ? umi : uma;
    p.kind = scenario;
    p.carrier_hz = carrier_hz;
    return p;
  }

  int n_steps() const { return static_cast<int>(std::floor(sim_duration_s / step_dt_s + 1e-9)); }

  bool operator==(const SimConfig&) const = default;
};

inline void validate(const SimConfig& c) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be > 0");
  };
  if (!(c.d_m >= 50.0 && c.d_m <= 500.0)) throw std::invalid_argument("d must be in [50, 500] m");
  if (c.n_ue < 1) throw std::invalid_argument("n_ue must be >= 1");
  if (c.n_sectors < 1 || c.n_sectors > 8) throw std::invalid_argument("n_sectors must be in [1, 8]");
  if (c.n_panels < 1 || c.n_panels > 4) throw std::invalid_argument("n_panels must be in [1, 4]");
  validate(c.gnb_array);
  validate(c.ue_array);
  positive(c.bandwidth_hz, "bandwidth_hz");
  if (!(c.carrier_hz > 6e9)) throw std::invalid_argument("carrier_hz must be > 6 GHz");
  if (!std::isfinite(c.noise_figure_db)) throw std::invalid_argument("noise_figure_db must be finite");
  if (!std::isfinite(c.outage_db)) throw std::invalid_argument("outage_db must be finite");
  positive(c.max_phy_rate_bps, "max_phy_rate_bps");
  positive(c.source_rate_bps, "source_rate_bps");
  if (!(c.spectral_efficiency > 0.0 && c.spectral_efficiency <= 1.0))
    throw std::invalid_argument("spectral_efficiency must be in (0, 1]");
  if (!(c.sim_duration_s >= 0.0) || !std::isfinite(c.sim_duration_s))
    throw std::invalid_argument("sim_duration_s must be >= 0");
  positive(c.step_dt_s, "step_dt_s");
  if (!(c.gnb_height_m >= 0.0)) throw std::invalid_argument("gnb_height_m must be >= 0");
  if (!(c.ue_height_m >= 0.0)) throw std::invalid_argument("ue_height_m must be >= 0");
  if (!std::isfinite(c.tx_power_dbm)) throw std::invalid_argument("tx_power_dbm must be finite");
  if (!(c.hysteresis_db >= 0.0)) throw std::invalid_argument("hysteresis_db must be >= 0");
  positive(c.walk_epoch_s, "walk_epoch_s");
  positive(c.coherence_period_s, "coherence_period_s");
  positive(c.los_update_period_s, "los_update_period_s");
  if (!(c.ue_speed_min_mps > 0.0 && c.ue_speed_min_mps <= c.ue_speed_max_mps))
    throw std::invalid_argument("ue speed range must satisfy 0 < ue_speed_min_mps <= ue_speed_max_mps");
  validate(c.umi);
  validate(c.uma);
}

}  // namespace mmw
