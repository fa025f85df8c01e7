#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmw {

using cplx = std::complex<double>;

constexpr double kPi = std::numbers::pi;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// Wraps an angle in degrees into [0, 360).
inline double wrap_360(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  return w >= 360.0 ? 0.0 : w;
}

/// Wraps an angle in degrees into [-180, 180].
inline double wrap_180(double deg) {
  double w = wrap_360(deg);
  return w > 180.0 ? w - 360.0 : w;
}

/// Smallest absolute difference between two azimuths, in [0, 180].
inline double angular_distance(double a_deg, double b_deg) {
  return std::abs(wrap_180(a_deg - b_deg));
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

enum class ElementModel { three_gpp, isotropic };

/// Parameters of a single radiating element. The isotropic model ignores the
/// pattern parameters and radiates 0 dBi in every direction.
struct ElementParams {
  double g_max_dbi = 8.0;
  double theta_3db_deg = 65.0;
  double phi_3db_deg = 65.0;
  double sla_v_db = 30.0;
  double a_m_db = 30.0;
  ElementModel model = ElementModel::three_gpp;

  bool operator==(const ElementParams&) const = default;
};

inline ElementParams gnb_element() { return {8.0, 65.0, 65.0, 30.0, 30.0, ElementModel::three_gpp}; }
inline ElementParams ue_element() { return {5.0, 90.0, 90.0, 30.0, 30.0, ElementModel::three_gpp}; }
inline ElementParams isotropic_element() { return {0.0, 65.0, 65.0, 30.0, 30.0, ElementModel::isotropic}; }

inline void validate(const ElementParams& p) {
  if (!(p.theta_3db_deg > 0.0)) throw std::invalid_argument("element.theta_3db must be > 0");
  if (!(p.phi_3db_deg > 0.0)) throw std::invalid_argument("element.phi_3db must be > 0");
  if (!(p.sla_v_db > 0.0)) throw std::invalid_argument("element.sla_v must be > 0");
  if (!(p.a_m_db > 0.0)) throw std::invalid_argument("element.a_m must be > 0");
  if (!std::isfinite(p.g_max_dbi)) throw std::invalid_argument("element.g_max must be finite");
}

/// Uniform planar array in the y-z plane. Element (p, q) sits in row p
/// (vertical, spacing dz) and column q (horizontal, spacing dy); spacings are
/// in wavelengths. Boresight elevation is a zenith angle, so 90 is the horizon.
struct ArrayConfig {
  int rows = 1;
  int cols = 1;
  double dy = 0.5;
  double dz = 0.5;
  ElementParams element{};
  double boresight_azimuth_deg = 0.0;
  double boresight_elevation_deg = 90.0;

  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }

  bool operator==(const ArrayConfig&) const = default;
};

inline void validate(const ArrayConfig& c) {
  if (c.rows < 1) throw std::invalid_argument("array.rows must be >= 1");
  if (c.cols < 1) throw std::invalid_argument("array.cols must be >= 1");
  if (!(c.dy > 0.0)) throw std::invalid_argument("array.dy must be > 0");
  if (!(c.dz > 0.0)) throw std::invalid_argument("array.dz must be > 0");
  if (!(c.boresight_azimuth_deg >= 0.0 && c.boresight_azimuth_deg < 360.0))
    throw std::invalid_argument("array.boresight_azimuth must be in [0, 360)");
  if (!(c.boresight_elevation_deg >= 0.0 && c.boresight_elevation_deg <= 180.0))
    throw std::invalid_argument("array.boresight_elevation must be in [0, 180]");
  validate(c.element);
}

/// Zenith angle theta (0 up, 90 horizon) and azimuth phi, both in degrees.
/// In an array's local frame phi is measured from the array boresight.
struct Direction {
  double theta = 90.0;
  double phi = 0.0;
};

struct SteeringVector {
  std::vector<cplx> weights;

  std::size_t size() const { return weights.size(); }
};

struct FieldPattern {
  double f_theta = 0.0;
  double f_phi = 0.0;
};

// ---------------------------------------------------------------------------
// Element pattern
// ---------------------------------------------------------------------------

inline double element_gain_vertical(double theta_deg, const ElementParams& p) {
  if (!(theta_deg >= 0.0 && theta_deg <= 180.0))
    throw std::domain_error("zenith angle outside [0, 180]: " + std::to_string(theta_deg));
  const double x = (theta_deg - 90.0) / p.theta_3db_deg;
  return -std::min(12.0 * x * x, p.sla_v_db);
}

inline double element_gain_horizontal(double phi_deg, const ElementParams& p) {
  if (!(phi_deg >= -180.0 && phi_deg <= 180.0))
    throw std::domain_error("azimuth outside [-180, 180]: " + std::to_string(phi_deg));
  const double x = phi_deg / p.phi_3db_deg;
  return -std::min(12.0 * x * x, p.a_m_db);
}

/// 3D element gain in dBi for a direction in the element's local frame.
inline double element_gain(const Direction& dir, const ElementParams& p) {
  const double vertical = element_gain_vertical(dir.theta, p);
  const double horizontal = element_gain_horizontal(dir.phi, p);
  if (p.model == ElementModel::isotropic) return 0.0;
  return p.g_max_dbi - std::min(-(vertical + horizontal), p.a_m_db);
}

// ---------------------------------------------------------------------------
// Frames
// ---------------------------------------------------------------------------

/// Maps a direction expressed in the world frame (azimuth counter-clockwise
/// from +x) into the array's local frame.
inline Direction to_local(const Direction& global, const ArrayConfig& cfg) {
  if (cfg.boresight_elevation_deg == 90.0) {
    return {global.theta, wrap_180(global.phi - cfg.boresight_azimuth_deg)};
  }
  const double th = deg_to_rad(global.theta);
  const double ph = deg_to_rad(global.phi - cfg.boresight_azimuth_deg);
  const double x = std::sin(th) * std::cos(ph);
  const double y = std::sin(th) * std::sin(ph);
  const double z = std::cos(th);
  // Tilt about y so that the boresight lands on the local horizon.
  const double g = deg_to_rad(90.0 - cfg.boresight_elevation_deg);
  const double xl = x * std::cos(g) + z * std::sin(g);
  const double zl = -x * std::sin(g) + z * std::cos(g);
  return {rad_to_deg(std::acos(std::clamp(zl, -1.0, 1.0))), wrap_180(rad_to_deg(std::atan2(y, xl)))};
}

// ---------------------------------------------------------------------------
// Array response
// ---------------------------------------------------------------------------

/// Per-row and per-column unit phasors of the spatial signature; element
/// (p, q) is row[p] * col[q].
struct SignatureFactors {
  std::vector<cplx> row;
  std::vector<cplx> col;
};

inline SignatureFactors signature_factors(const ArrayConfig& cfg, const Direction& local) {
  const double th = deg_to_rad(local.theta);
  const double ph = deg_to_rad(local.phi);
  const double col_step = 2.0 * kPi * cfg.dy * std::sin(th) * std::sin(ph);
  const double row_step = 2.0 * kPi * cfg.dz * std::cos(th);
  SignatureFactors f;
  f.row.resize(static_cast<std::size_t>(cfg.rows));
  f.col.resize(static_cast<std::size_t>(cfg.cols));
  for (int p = 0; p < cfg.rows; ++p) f.row[p] = std::polar(1.0, row_step * p);
  for (int q = 0; q < cfg.cols; ++q) f.col[q] = std::polar(1.0, col_step * q);
  return f;
}

/// Unit-amplitude spatial signature, one phasor per element (row-major).
inline std::vector<cplx> spatial_signature(const ArrayConfig& cfg, const Direction& local) {
  const SignatureFactors f = signature_factors(cfg, local);
  std::vector<cplx> out;
  out.reserve(cfg.size());
  for (const cplx& r : f.row)
    for (const cplx& c : f.col) out.push_back(r * c);
  return out;
}

/// Conjugate-phase steering weights toward a local direction, unit norm.
inline SteeringVector steering_vector(const ArrayConfig& cfg, const Direction& local) {
  SteeringVector sv{spatial_signature(cfg, local)};
  const double amp = 1.0 / std::sqrt(static_cast<double>(cfg.size()));
  for (cplx& w : sv.weights) w *= amp;
  return sv;
}

inline double norm(const SteeringVector& sv) {
  double s = 0.0;
  for (const cplx& w : sv.weights) s += std::norm(w);
  return std::sqrt(s);
}

/// Lowest value reported by array_factor; exact pattern nulls map here.
constexpr double kArrayFactorFloorDb = -200.0;

inline double array_factor(const ArrayConfig& cfg, const SteeringVector& weights, const Direction& local) {
  if (weights.size() != cfg.size())
    throw std::invalid_argument("steering vector length " + std::to_string(weights.size()) +
                                " does not match array size " + std::to_string(cfg.size()));
  const SignatureFactors f = signature_factors(cfg, local);
  cplx acc{0.0, 0.0};
  std::size_t i = 0;
  for (const cplx& r : f.row)
    for (const cplx& c : f.col) acc += std::conj(weights.weights[i++]) * r * c;
  // a(dir) carries 1/sqrt(N) amplitude, so |w^H a|^2 * N == |w^H signature|^2.
  const double power = std::norm(acc);
  return std::max(linear_to_db(power), kArrayFactorFloorDb);
}

/// Composite array gain in dB: element pattern plus array factor.
inline double array_radiation_pattern(const ArrayConfig& cfg, const SteeringVector& weights,
                                      const Direction& local) {
  return element_gain(local, cfg.element) + array_factor(cfg, weights, local);
}

inline FieldPattern field_pattern_from_gain(double gain_db, double zeta_deg) {
  const double amp = std::sqrt(db_to_linear(gain_db));
  const double z = deg_to_rad(zeta_deg);
  return {amp * std::cos(z), amp * std::sin(z)};
}

/// Field pattern of the steered array, polarized at slant angle zeta.
inline FieldPattern field_pattern(const ArrayConfig& cfg, const SteeringVector& weights, const Direction& local,
                                  double zeta_deg) {
  return field_pattern_from_gain(array_radiation_pattern(cfg, weights, local), zeta_deg);
}

/// Field pattern of a single element, as applied per ray inside the channel
/// matrix (the array response enters there through the spatial signatures).
inline FieldPattern element_field_pattern(const ArrayConfig& cfg, const Direction& local, double zeta_deg) {
  return field_pattern_from_gain(element_gain(local, cfg.element), zeta_deg);
}

// ---------------------------------------------------------------------------
// Sectors and panels
// ---------------------------------------------------------------------------

inline double sector_boresight(int n_sectors, int index, double offset_deg = 0.0) {
  return wrap_360(offset_deg + 360.0 * index / n_sectors);
}

/// Index of the sector (or panel) whose boresight is angularly closest to the
/// peer azimuth. Boresights sit at offset + i * 360 / n; ties go to the lower
/// index.
inline int sector_for_direction(int n_sectors, double azimuth_deg, double offset_deg = 0.0) {
  if (n_sectors < 1) throw std::invalid_argument("n_sectors must be >= 1");
  int best = 0;
  double best_dist = angular_distance(azimuth_deg, sector_boresight(n_sectors, 0, offset_deg));
  for (int i = 1; i < n_sectors; ++i) {
    const double d = angular_distance(azimuth_deg, sector_boresight(n_sectors, i, offset_deg));
    if (d < best_dist - 1e-12) {
      best = i;
      best_dist = d;
    }
  }
  return best;
}

}  // namespace mmw
