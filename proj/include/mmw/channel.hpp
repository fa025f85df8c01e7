#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mmw/antenna.hpp"

namespace mmw {

enum class ScenarioKind { UMi, UMa };

inline std::string to_string(ScenarioKind k) { return k == ScenarioKind::UMi ? "UMi" : "UMa"; }

inline ScenarioKind scenario_from_string(const std::string& s) {
  if (s == "UMi") return ScenarioKind::UMi;
  if (s == "UMa") return ScenarioKind::UMa;
  throw std::invalid_argument("unknown scenario '" + s + "' (expected UMi or UMa)");
}

/// PL = a + b*log10(d_3d) + c*log10(f_GHz) - ue_height_coeff*(h_ue - 1.5)
struct PathLossCoeffs {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double ue_height_coeff = 0.0;

  bool operator==(const PathLossCoeffs&) const = default;
};

/// Large- and small-scale parameters for one propagation state. Angular
/// spreads are standard deviations in degrees: cluster_* spreads the cluster
/// centres around the direct path, ray_* spreads rays around their cluster.
struct StateParams {
  PathLossCoeffs path_loss{};
  double shadowing_std_db = 4.0;
  int n_clusters = 12;
  int rays_per_cluster = 20;
  double cluster_asd_deg = 10.0;
  double cluster_asa_deg = 40.0;
  double cluster_zsd_deg = 2.0;
  double cluster_zsa_deg = 5.0;
  double ray_asd_deg = 3.0;
  double ray_asa_deg = 17.0;
  double ray_zsd_deg = 1.0;
  double ray_zsa_deg = 7.0;
  double delay_spread_s = 50e-9;
  double delay_scaling = 3.0;

  bool operator==(const StateParams&) const = default;
};

struct ScenarioProfile {
  ScenarioKind kind = ScenarioKind::UMi;
  double carrier_hz = 28e9;
  // p(d) = min(d1/d, 1) * (1 - exp(-d/d2)) + exp(-d/d2)
  double los_d1_m = 18.0;
  double los_d2_m = 36.0;
  double k_factor_db = 9.0;
  StateParams los{};
  StateParams nlos{};

  const StateParams& state(bool is_los) const { return is_los ? los : nlos; }

  bool operator==(const ScenarioProfile&) const = default;
};

inline void validate(const StateParams& s, const std::string& where) {
  if (s.n_clusters < 1) throw std::invalid_argument(where + ".n_clusters must be >= 1");
  if (s.rays_per_cluster < 1) throw std::invalid_argument(where + ".rays_per_cluster must be >= 1");
  if (!(s.shadowing_std_db >= 0.0)) throw std::invalid_argument(where + ".shadowing_std_db must be >= 0");
  if (!(s.delay_spread_s > 0.0)) throw std::invalid_argument(where + ".delay_spread_s must be > 0");
  if (!(s.delay_scaling > 1.0)) throw std::invalid_argument(where + ".delay_scaling must be > 1");
  for (double v : {s.cluster_asd_deg, s.cluster_asa_deg, s.cluster_zsd_deg, s.cluster_zsa_deg, s.ray_asd_deg,
                   s.ray_asa_deg, s.ray_zsd_deg, s.ray_zsa_deg})
    if (!(v >= 0.0)) throw std::invalid_argument(where + " angular spreads must be >= 0");
}

inline void validate(const ScenarioProfile& p) {
  if (!(p.carrier_hz > 6e9)) throw std::invalid_argument("profile.carrier_hz must be > 6 GHz");
  if (!(p.los_d1_m > 0.0) || !(p.los_d2_m > 0.0))
    throw std::invalid_argument("profile LoS probability distances must be > 0");
  validate(p.los, "profile.los");
  validate(p.nlos, "profile.nlos");
}

/// Urban Micro street canyon defaults at 28 GHz.
inline ScenarioProfile umi_profile() {
  ScenarioProfile p;
  p.kind = ScenarioKind::UMi;
  p.los_d1_m = 18.0;
  p.los_d2_m = 36.0;
  p.los = {{32.4, 21.0, 20.0, 0.0}, 4.0, 12, 20, 13.7, 41.0, 1.5, 3.8, 3.0, 17.0, 1.0, 7.0, 32e-9, 3.0};
  p.nlos = {{22.4, 35.3, 21.3, 0.3}, 7.82, 19, 20, 15.6, 49.0, 1.1, 7.3, 3.0, 22.0, 1.0, 7.0, 66e-9, 2.1};
  return p;
}

/// Urban Macro defaults at 28 GHz.
inline ScenarioProfile uma_profile() {
  ScenarioProfile p;
  p.kind = ScenarioKind::UMa;
  p.los_d1_m = 18.0;
  p.los_d2_m = 63.0;
  p.los = {{28.0, 22.0, 20.0, 0.0}, 4.0, 12, 20, 16.6, 65.0, 4.4, 8.9, 5.0, 11.0, 1.0, 7.0, 80e-9, 2.5};
  p.nlos = {{13.54, 39.08, 20.0, 0.6}, 6.0, 20, 20, 21.6, 48.9, 6.2, 11.0, 5.0, 15.0, 1.0, 7.0, 266e-9, 2.3};
  return p;
}

inline ScenarioProfile default_profile(ScenarioKind k) { return k == ScenarioKind::UMi ? umi_profile() : uma_profile(); }

// ---------------------------------------------------------------------------
// Realizations
// ---------------------------------------------------------------------------

struct Ray {
  cplx gain{0.0, 0.0};
  Direction aod{};
  Direction aoa{};
  double delay_s = 0.0;
};

struct Cluster {
  double power = 0.0;
  Direction aod{};
  Direction aoa{};
  std::vector<Ray> rays;
};

/// Ray angles are either link-relative (direct path at theta = 90, phi = 0 on
/// both ends, as produced by generate_realization) or world-frame (after
/// anchor()); beamformed quantities expect world-frame angles.
struct ChannelRealization {
  bool los = false;
  double path_loss_db = 0.0;
  double shadowing_db = 0.0;
  std::vector<Cluster> clusters;

  std::size_t ray_count() const {
    std::size_t n = 0;
    for (const Cluster& c : clusters) n += c.rays.size();
    return n;
  }
};

struct LinkBudget {
  double beamformed_gain_db = 0.0;
  double rx_power_dbm = 0.0;
  bool serving = false;
};

inline LinkBudget link_budget(double tx_power_dbm, double beamformed_gain_db, const ChannelRealization& real,
                              bool serving = false) {
  return {beamformed_gain_db, tx_power_dbm + beamformed_gain_db - real.path_loss_db - real.shadowing_db, serving};
}

inline double los_probability(const ScenarioProfile& profile, double distance_2d) {
  if (!(distance_2d > 0.0)) throw std::invalid_argument("distance_2d must be > 0");
  const double e = std::exp(-distance_2d / profile.los_d2_m);
  return std::min(profile.los_d1_m / distance_2d, 1.0) * (1.0 - e) + e;
}

/// LoS state for a given uniform draw in [0, 1).
inline bool los_from_uniform(const ScenarioProfile& profile, double distance_2d, double u) {
  return u < los_probability(profile, distance_2d);
}

template <class Rng>
bool los_state(const ScenarioProfile& profile, double distance_2d, Rng& rng) {
  const double p = los_probability(profile, distance_2d);
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

inline double path_loss(const ScenarioProfile& profile, bool los, double distance_3d, double ue_height_m = 1.5) {
  if (!(distance_3d >= 1.0)) throw std::invalid_argument("distance_3d must be >= 1 m");
  const PathLossCoeffs& k = profile.state(los).path_loss;
  return k.a + k.b * std::log10(distance_3d) + k.c * std::log10(profile.carrier_hz / 1e9) -
         k.ue_height_coeff * (ue_height_m - 1.5);
}

template <class Rng>
double draw_shadowing(const ScenarioProfile& profile, bool los, Rng& rng) {
  const double s = profile.state(los).shadowing_std_db;
  if (s == 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, s)(rng);
}

/// Adds a link-relative offset (direct path at theta = 90, phi = 0) to an
/// absolute direction; zenith overshoot is folded back across the pole.
inline Direction compose(const Direction& base, const Direction& offset) {
  double theta = base.theta + (offset.theta - 90.0);
  double phi = base.phi + offset.phi;
  theta = std::fmod(theta, 360.0);
  if (theta < 0.0) theta += 360.0;
  if (theta > 180.0) {
    theta = 360.0 - theta;
    phi += 180.0;
  }
  return {theta, wrap_180(phi)};
}

template <class Rng>
ChannelRealization generate_realization(const ScenarioProfile& profile, bool los, Rng& rng) {
  const StateParams& sp = profile.state(los);
  const int n = sp.n_clusters;
  const int m = sp.rays_per_cluster;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Exponential delay-power profile.
  std::vector<double> delays(static_cast<std::size_t>(n));
  for (double& d : delays) d = -sp.delay_scaling * sp.delay_spread_s * std::log(1.0 - unit(rng));
  std::sort(delays.begin(), delays.end());
  const double d0 = delays.front();
  for (double& d : delays) d -= d0;

  std::vector<double> powers(delays.size());
  for (std::size_t i = 0; i < delays.size(); ++i)
    powers[i] = std::exp(-delays[i] * (sp.delay_scaling - 1.0) / (sp.delay_scaling * sp.delay_spread_s));

  const int first_scattered = los ? 1 : 0;
  const double scattered_share = los && n > 1 ? 1.0 / (db_to_linear(profile.k_factor_db) + 1.0) : (los ? 0.0 : 1.0);
  double scattered_sum = 0.0;
  for (int i = first_scattered; i < n; ++i) scattered_sum += powers[i];
  for (int i = first_scattered; i < n; ++i) powers[i] *= scattered_share / scattered_sum;
  if (los) powers[0] = 1.0 - scattered_share;

  auto spread = [&](double mean_theta, double mean_phi, double zs, double as) {
    return Direction{mean_theta + zs * gauss(rng), mean_phi + as * gauss(rng)};
  };
  auto fold = [](Direction d) { return compose({90.0, 0.0}, d); };

  ChannelRealization real;
  real.los = los;
  real.clusters.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Cluster c;
    c.power = powers[i];
    if (los && i == 0) {
      c.rays.push_back(Ray{cplx{std::sqrt(c.power), 0.0}, {90.0, 0.0}, {90.0, 0.0}, 0.0});
      real.clusters.push_back(std::move(c));
      continue;
    }
    c.aod = fold(spread(90.0, 0.0, sp.cluster_zsd_deg, sp.cluster_asd_deg));
    c.aoa = fold(spread(90.0, 0.0, sp.cluster_zsa_deg, sp.cluster_asa_deg));
    const double amp = std::sqrt(c.power / m);
    c.rays.reserve(static_cast<std::size_t>(m));
    for (int r = 0; r < m; ++r) {
      Ray ray;
      ray.aod = compose(c.aod, spread(90.0, 0.0, sp.ray_zsd_deg, sp.ray_asd_deg));
      ray.aoa = compose(c.aoa, spread(90.0, 0.0, sp.ray_zsa_deg, sp.ray_asa_deg));
      ray.gain = std::polar(amp, 2.0 * kPi * unit(rng));
      ray.delay_s = delays[i];
      c.rays.push_back(ray);
    }
    real.clusters.push_back(std::move(c));
  }
  return real;
}

/// World-frame directions of the direct path at each end of a link.
struct LinkGeometry {
  Direction departure{};
  Direction arrival{};
};

/// Rotates a link-relative realization onto the current link geometry.
inline ChannelRealization anchor(const ChannelRealization& rel, const LinkGeometry& geo) {
  ChannelRealization out = rel;
  for (Cluster& c : out.clusters) {
    c.aod = compose(geo.departure, c.aod);
    c.aoa = compose(geo.arrival, c.aoa);
    for (Ray& r : c.rays) {
      r.aod = compose(geo.departure, r.aod);
      r.aoa = compose(geo.arrival, r.aoa);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Channel matrix and beamforming
// ---------------------------------------------------------------------------

/// One entry of the channel matrix: sum over rays of the receive field
/// pattern, ray gain, transmit field pattern and both spatial signatures.
inline cplx channel_entry(std::span<const Ray> rays, std::span<const FieldPattern> tx_field,
                          std::span<const FieldPattern> rx_field, std::span<const cplx> u_t,
                          std::span<const cplx> u_r) {
  const std::size_t n = rays.size();
  if (tx_field.size() != n || rx_field.size() != n || u_t.size() != n || u_r.size() != n)
    throw std::invalid_argument("channel_entry: per-ray inputs must match the ray count");
  cplx h{0.0, 0.0};
  for (std::size_t m = 0; m < n; ++m) {
    const double field = rx_field[m].f_theta * tx_field[m].f_theta + rx_field[m].f_phi * tx_field[m].f_phi;
    h += field * rays[m].gain * u_r[m] * std::conj(u_t[m]);
  }
  return h;
}

namespace detail {

inline std::vector<Ray> flatten(const ChannelRealization& real) {
  std::vector<Ray> rays;
  rays.reserve(real.ray_count());
  for (const Cluster& c : real.clusters) rays.insert(rays.end(), c.rays.begin(), c.rays.end());
  return rays;
}

inline void require_size(const ArrayConfig& cfg, const SteeringVector& w, const char* side) {
  if (w.size() != cfg.size())
    throw std::invalid_argument(std::string(side) + " weights length " + std::to_string(w.size()) +
                                " does not match array size " + std::to_string(cfg.size()));
}

}  // namespace detail

/// Channel matrix H (rx elements x tx elements) for world-frame rays. Built
/// as U_r * diag(c) * U_t^H with c the per-ray field-weighted gains.
inline Eigen::MatrixXcd channel_matrix(std::span<const Ray> rays, const ArrayConfig& tx_cfg,
                                       const ArrayConfig& rx_cfg, double tx_zeta_deg = 0.0,
                                       double rx_zeta_deg = 0.0) {
  const auto m = static_cast<Eigen::Index>(rays.size());
  Eigen::MatrixXcd ur(static_cast<Eigen::Index>(rx_cfg.size()), m);
  Eigen::MatrixXcd ut(static_cast<Eigen::Index>(tx_cfg.size()), m);
  Eigen::VectorXcd coeff(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Ray& ray = rays[static_cast<std::size_t>(k)];
    const Direction lt = to_local(ray.aod, tx_cfg);
    const Direction lr = to_local(ray.aoa, rx_cfg);
    const FieldPattern ft = element_field_pattern(tx_cfg, lt, tx_zeta_deg);
    const FieldPattern fr = element_field_pattern(rx_cfg, lr, rx_zeta_deg);
    coeff(k) = (fr.f_theta * ft.f_theta + fr.f_phi * ft.f_phi) * ray.gain;
    const std::vector<cplx> sr = spatial_signature(rx_cfg, lr);
    const std::vector<cplx> st = spatial_signature(tx_cfg, lt);
    ur.col(k) = Eigen::Map<const Eigen::VectorXcd>(sr.data(), static_cast<Eigen::Index>(sr.size()));
    ut.col(k) = Eigen::Map<const Eigen::VectorXcd>(st.data(), static_cast<Eigen::Index>(st.size()));
  }
  return ur * coeff.asDiagonal() * ut.adjoint();
}

inline Eigen::MatrixXcd channel_matrix(const ChannelRealization& real, const ArrayConfig& tx_cfg,
                                       const ArrayConfig& rx_cfg, double tx_zeta_deg = 0.0,
                                       double rx_zeta_deg = 0.0) {
  const std::vector<Ray> rays = detail::flatten(real);
  return channel_matrix(rays, tx_cfg, rx_cfg, tx_zeta_deg, rx_zeta_deg);
}

/// Per-ray response of one end of a link to its beamforming weights, split
/// by polarization component: f_theta * (w^H u) and f_phi * (w^H u) on the
/// receive side; f * (u^H w) on the transmit side.
struct EndResponse {
  std::vector<cplx> theta;
  std::vector<cplx> phi;
};

/// Weight-independent per-ray quantities of one array on one end of a link:
/// element field pattern and the unit phasor steps between adjacent rows and
/// columns of the spatial signature.
struct ArrayRayTable {
  std::vector<double> f_theta;
  std::vector<double> f_phi;
  std::vector<cplx> row_step;
  std::vector<cplx> col_step;

  std::size_t size() const { return f_theta.size(); }
};

/// World-frame angles of one end of each ray, with their sines and cosines.
struct RayAngles {
  Direction dir{};
  double sin_theta = 0.0;
  double cos_theta = 1.0;
  double sin_phi = 0.0;
  double cos_phi = 1.0;
};

inline std::vector<RayAngles> ray_angles(std::span<const Ray> rays, bool transmit) {
  std::vector<RayAngles> out(rays.size());
  for (std::size_t m = 0; m < rays.size(); ++m) {
    const Direction& d = transmit ? rays[m].aod : rays[m].aoa;
    const double th = deg_to_rad(d.theta);
    const double ph = deg_to_rad(d.phi);
    out[m] = {d, std::sin(th), std::cos(th), std::sin(ph), std::cos(ph)};
  }
  return out;
}

inline ArrayRayTable ray_table(std::span<const RayAngles> angles, const ArrayConfig& cfg, double zeta_deg = 0.0) {
  ArrayRayTable t;
  const std::size_t n = angles.size();
  t.f_theta.resize(n);
  t.f_phi.resize(n);
  t.row_step.resize(n);
  t.col_step.resize(n);
  const double cz = std::cos(deg_to_rad(zeta_deg));
  const double sz = std::sin(deg_to_rad(zeta_deg));
  const double half_ln10_over_10 = std::log(10.0) / 20.0;
  const bool level = cfg.boresight_elevation_deg == 90.0;
  const double alpha = deg_to_rad(cfg.boresight_azimuth_deg);
  const double ca = std::cos(alpha);
  const double sa = std::sin(alpha);
  for (std::size_t m = 0; m < n; ++m) {
    const RayAngles& a = angles[m];
    Direction local;
    double sin_theta = a.sin_theta;
    double cos_theta = a.cos_theta;
    double sin_phi = 0.0;
    if (level) {
      // Pure azimuth rotation: reuse the world-frame trigonometry.
      double phi = a.dir.phi - cfg.boresight_azimuth_deg;
      while (phi > 180.0) phi -= 360.0;
      while (phi < -180.0) phi += 360.0;
      local = {a.dir.theta, phi};
      sin_phi = a.sin_phi * ca - a.cos_phi * sa;
    } else {
      local = to_local(a.dir, cfg);
      const double th = deg_to_rad(local.theta);
      sin_theta = std::sin(th);
      cos_theta = std::cos(th);
      sin_phi = std::sin(deg_to_rad(local.phi));
    }
    // sqrt of the linear element gain.
    const double amp = std::exp(element_gain(local, cfg.element) * half_ln10_over_10);
    t.f_theta[m] = amp * cz;
    t.f_phi[m] = amp * sz;
    t.col_step[m] = std::polar(1.0, 2.0 * kPi * cfg.dy * sin_theta * sin_phi);
    t.row_step[m] = std::polar(1.0, 2.0 * kPi * cfg.dz * cos_theta);
  }
  return t;
}

inline ArrayRayTable ray_table(std::span<const Ray> rays, bool transmit, const ArrayConfig& cfg,
                               double zeta_deg = 0.0) {
  return ray_table(ray_angles(rays, transmit), cfg, zeta_deg);
}

namespace detail {

// Plain complex product; std::complex's operator* carries C99 Annex G
// inf/nan recovery that dominates these inner loops.
inline cplx cmul(cplx a, cplx b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

// conj(a) * b
inline cplx cmul_conj(cplx a, cplx b) {
  return {a.real() * b.real() + a.imag() * b.imag(), a.real() * b.imag() - a.imag() * b.real()};
}

// w^H u for the unit-phasor signature with the given steps, built row by row
// without materializing u.
inline cplx project(int rows, int cols, const cplx* w, cplx row_step, cplx col_step) {
  cplx acc{0.0, 0.0};
  cplx row{1.0, 0.0};
  for (int p = 0; p < rows; ++p) {
    cplx inner{0.0, 0.0};
    cplx col{1.0, 0.0};
    for (int q = 0; q < cols; ++q) {
      inner += cmul_conj(*w++, col);
      col = cmul(col, col_step);
    }
    acc += cmul(inner, row);
    row = cmul(row, row_step);
  }
  return acc;
}

inline cplx geometric_projection(const std::vector<cplx>& w, cplx step) {
  cplx acc{0.0, 0.0};
  cplx x{1.0, 0.0};
  for (const cplx& wk : w) {
    acc += cmul_conj(wk, x);
    x = cmul(x, step);
  }
  return acc;
}

inline EndResponse finish(const ArrayRayTable& t, bool transmit, std::vector<cplx> proj) {
  EndResponse out;
  out.theta.resize(proj.size());
  out.phi.resize(proj.size());
  for (std::size_t m = 0; m < proj.size(); ++m) {
    const cplx p = transmit ? std::conj(proj[m]) : proj[m];
    out.theta[m] = t.f_theta[m] * p;
    out.phi[m] = t.f_phi[m] * p;
  }
  return out;
}

}  // namespace detail

inline EndResponse end_response(const ArrayRayTable& table, bool transmit, const ArrayConfig& cfg,
                                const SteeringVector& w) {
  detail::require_size(cfg, w, transmit ? "tx" : "rx");
  std::vector<cplx> proj(table.size());
  for (std::size_t m = 0; m < table.size(); ++m)
    proj[m] = detail::project(cfg.rows, cfg.cols, w.weights.data(), table.row_step[m], table.col_step[m]);
  return detail::finish(table, transmit, std::move(proj));
}

/// Same as end_response for weights of the form scale * row[p] * col[q]
/// (every steering_vector has this form), in O(rows + cols) per ray.
inline EndResponse end_response_separable(const ArrayRayTable& table, bool transmit, const SignatureFactors& factors,
                                          double scale) {
  std::vector<cplx> proj(table.size());
  for (std::size_t m = 0; m < table.size(); ++m)
    proj[m] = scale * detail::cmul(detail::geometric_projection(factors.row, table.row_step[m]),
                                   detail::geometric_projection(factors.col, table.col_step[m]));
  return detail::finish(table, transmit, std::move(proj));
}

inline EndResponse end_response(std::span<const Ray> rays, bool transmit, const ArrayConfig& cfg,
                                const SteeringVector& w, double zeta_deg = 0.0) {
  detail::require_size(cfg, w, transmit ? "tx" : "rx");
  return end_response(ray_table(rays, transmit, cfg, zeta_deg), transmit, cfg, w);
}

/// |w_r^H H w_t|^2 from precomputed end responses over the same ray list.
inline double combine_responses(std::span<const Ray> rays, const EndResponse& tx, const EndResponse& rx) {
  cplx acc{0.0, 0.0};
  for (std::size_t m = 0; m < rays.size(); ++m)
    acc += detail::cmul(rays[m].gain, detail::cmul(rx.theta[m], tx.theta[m]) + detail::cmul(rx.phi[m], tx.phi[m]));
  return std::norm(acc);
}

constexpr double kGainFloorDb = -300.0;

inline double beamformed_gain_linear(const ChannelRealization& real, const ArrayConfig& tx_cfg,
                                     const ArrayConfig& rx_cfg, const SteeringVector& tx_weights,
                                     const SteeringVector& rx_weights, double tx_zeta_deg = 0.0,
                                     double rx_zeta_deg = 0.0) {
  const std::vector<Ray> rays = detail::flatten(real);
  const EndResponse tx = end_response(rays, true, tx_cfg, tx_weights, tx_zeta_deg);
  const EndResponse rx = end_response(rays, false, rx_cfg, rx_weights, rx_zeta_deg);
  return combine_responses(rays, tx, rx);
}

/// 10*log10(|w_r^H H w_t|^2), element patterns included via the field patterns.
inline double beamformed_gain(const ChannelRealization& real, const ArrayConfig& tx_cfg, const ArrayConfig& rx_cfg,
                              const SteeringVector& tx_weights, const SteeringVector& rx_weights,
                              double tx_zeta_deg = 0.0, double rx_zeta_deg = 0.0) {
  const double g = beamformed_gain_linear(real, tx_cfg, rx_cfg, tx_weights, rx_weights, tx_zeta_deg, rx_zeta_deg);
  return std::max(linear_to_db(g), kGainFloorDb);
}

struct BeamPair {
  SteeringVector tx;
  SteeringVector rx;
  double gain_linear = 0.0;
};

inline ArrayConfig with_isotropic_elements(ArrayConfig cfg) {
  cfg.element.model = ElementModel::isotropic;
  return cfg;
}

/// Dominant singular pair of a channel matrix: rx = left vector, tx = right
/// vector, gain = sigma_max^2.
inline BeamPair dominant_beams(const Eigen::MatrixXcd& h) {
  if (h.size() == 0 || h.cwiseAbs().maxCoeff() == 0.0)
    throw std::runtime_error("optimal beamforming: channel matrix is identically zero");
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double sigma = svd.singularValues()(0);
  if (!(sigma > 1e-150)) throw std::runtime_error("optimal beamforming: degenerate channel matrix");
  BeamPair bp;
  const Eigen::VectorXcd u = svd.matrixU().col(0);
  const Eigen::VectorXcd v = svd.matrixV().col(0);
  bp.rx.weights.assign(u.data(), u.data() + u.size());
  bp.tx.weights.assign(v.data(), v.data() + v.size());
  bp.gain_linear = sigma * sigma;
  return bp;
}

/// Eigen-beamforming upper bound on isotropic arrays.
inline BeamPair optimal_beamforming(const ChannelRealization& real, const ArrayConfig& tx_cfg,
                                    const ArrayConfig& rx_cfg) {
  return dominant_beams(channel_matrix(real, with_isotropic_elements(tx_cfg), with_isotropic_elements(rx_cfg)));
}

}  // namespace mmw
