#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "mmw/antenna.hpp"
#include "mmw/channel.hpp"
#include "mmw/sim_config.hpp"

namespace mmw {

using ojson = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
public:
  enum class Kind { parse, validation };

  ConfigError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

namespace detail {

inline std::string join_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

// Reads optional members of one JSON object and rejects any it did not read.
class ObjectReader {
public:
  ObjectReader(const ojson& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) fail(path_.empty() ? "top level" : path_, "expected an object");
  }

  void read(const char* key, double& out) {
    if (const ojson* v = find(key)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
    }
  }

  void read(const char* key, int& out) {
    if (const ojson* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      const auto x = v->get<std::int64_t>();
      if (x < INT32_MIN || x > INT32_MAX) fail(key, "integer out of range");
      out = static_cast<int>(x);
    }
  }

  void read(const char* key, std::uint64_t& out) {
    if (const ojson* v = find(key)) {
      if (!v->is_number_unsigned()) fail(key, "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void read(const char* key, std::string& out) {
    if (const ojson* v = find(key)) {
      if (!v->is_string()) fail(key, "expected a string");
      out = v->get<std::string>();
    }
  }

  template <class Fn>
  void read_object(const char* key, Fn&& fn) {
    if (const ojson* v = find(key)) {
      ObjectReader child(*v, join_path(path_, key));
      fn(child);
      child.finish();
    }
  }

  const ojson* find(const char* key) {
    const auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(ConfigError::Kind::validation, "field '" + join_path(path_, key) + "': " + msg);
  }

  void finish() const {
    for (const auto& [k, _] : j_.items())
      if (!seen_.count(k)) fail(k, "unknown key");
  }

  const std::string& path() const { return path_; }

private:
  const ojson& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class Fn>
auto with_field(const std::string& field, Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ConfigError::Kind::validation, "field '" + field + "': " + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline std::string to_string(ElementModel m) { return m == ElementModel::isotropic ? "isotropic" : "3gpp"; }

inline ojson to_json(const ElementParams& p) {
  return {{"model", to_string(p.model)},     {"g_max_dbi", p.g_max_dbi}, {"theta_3db_deg", p.theta_3db_deg},
          {"phi_3db_deg", p.phi_3db_deg},    {"sla_v_db", p.sla_v_db},   {"a_m_db", p.a_m_db}};
}

inline ojson to_json(const ArrayConfig& c) {
  return {{"rows", c.rows},
          {"cols", c.cols},
          {"dy", c.dy},
          {"dz", c.dz},
          {"element", to_json(c.element)},
          {"boresight_azimuth_deg", c.boresight_azimuth_deg},
          {"boresight_elevation_deg", c.boresight_elevation_deg}};
}

inline ojson to_json(const StateParams& s) {
  return {{"path_loss",
           {{"a", s.path_loss.a}, {"b", s.path_loss.b}, {"c", s.path_loss.c},
            {"ue_height_coeff", s.path_loss.ue_height_coeff}}},
          {"shadowing_std_db", s.shadowing_std_db},
          {"n_clusters", s.n_clusters},
          {"rays_per_cluster", s.rays_per_cluster},
          {"cluster_asd_deg", s.cluster_asd_deg},
          {"cluster_asa_deg", s.cluster_asa_deg},
          {"cluster_zsd_deg", s.cluster_zsd_deg},
          {"cluster_zsa_deg", s.cluster_zsa_deg},
          {"ray_asd_deg", s.ray_asd_deg},
          {"ray_asa_deg", s.ray_asa_deg},
          {"ray_zsd_deg", s.ray_zsd_deg},
          {"ray_zsa_deg", s.ray_zsa_deg},
          {"delay_spread_s", s.delay_spread_s},
          {"delay_scaling", s.delay_scaling}};
}

// Carrier and kind live on SimConfig, so a profile carries only its tables.
inline ojson to_json(const ScenarioProfile& p) {
  return {{"los_d1_m", p.los_d1_m},
          {"los_d2_m", p.los_d2_m},
          {"k_factor_db", p.k_factor_db},
          {"los", to_json(p.los)},
          {"nlos", to_json(p.nlos)}};
}

inline ojson to_json(const SimConfig& c) {
  return {{"scenario", to_string(c.scenario)},
          {"d_m", c.d_m},
          {"n_ue", c.n_ue},
          {"n_sectors", c.n_sectors},
          {"n_panels", c.n_panels},
          {"beamforming", to_string(c.beamforming)},
          {"seed", c.seed},
          {"sim_duration_s", c.sim_duration_s},
          {"step_dt_s", c.step_dt_s},
          {"bandwidth_hz", c.bandwidth_hz},
          {"carrier_hz", c.carrier_hz},
          {"noise_figure_db", c.noise_figure_db},
          {"outage_db", c.outage_db},
          {"hysteresis_db", c.hysteresis_db},
          {"max_phy_rate_bps", c.max_phy_rate_bps},
          {"source_rate_bps", c.source_rate_bps},
          {"spectral_efficiency", c.spectral_efficiency},
          {"tx_power_dbm", c.tx_power_dbm},
          {"gnb_height_m", c.gnb_height_m},
          {"ue_height_m", c.ue_height_m},
          {"ue_speed_min_mps", c.ue_speed_min_mps},
          {"ue_speed_max_mps", c.ue_speed_max_mps},
          {"walk_epoch_s", c.walk_epoch_s},
          {"coherence_period_s", c.coherence_period_s},
          {"los_update_period_s", c.los_update_period_s},
          {"gnb_zeta_deg", c.gnb_zeta_deg},
          {"ue_zeta_deg", c.ue_zeta_deg},
          {"gnb_array", to_json(c.gnb_array)},
          {"ue_array", to_json(c.ue_array)},
          {"profiles", {{"UMi", to_json(c.umi)}, {"UMa", to_json(c.uma)}}}};
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

inline void read_into(detail::ObjectReader& r, ElementParams& p) {
  std::string model = to_string(p.model);
  r.read("model", model);
  if (model == "3gpp")
    p.model = ElementModel::three_gpp;
  else if (model == "isotropic")
    p.model = ElementModel::isotropic;
  else
    r.fail("model", "expected '3gpp' or 'isotropic'");
  r.read("g_max_dbi", p.g_max_dbi);
  r.read("theta_3db_deg", p.theta_3db_deg);
  r.read("phi_3db_deg", p.phi_3db_deg);
  r.read("sla_v_db", p.sla_v_db);
  r.read("a_m_db", p.a_m_db);
}

inline void read_into(detail::ObjectReader& r, ArrayConfig& c) {
  r.read("rows", c.rows);
  r.read("cols", c.cols);
  r.read("dy", c.dy);
  r.read("dz", c.dz);
  r.read_object("element", [&](detail::ObjectReader& e) { read_into(e, c.element); });
  r.read("boresight_azimuth_deg", c.boresight_azimuth_deg);
  r.read("boresight_elevation_deg", c.boresight_elevation_deg);
  detail::with_field(r.path(), [&] { validate(c); });
}

inline void read_into(detail::ObjectReader& r, StateParams& s) {
  r.read_object("path_loss", [&](detail::ObjectReader& p) {
    p.read("a", s.path_loss.a);
    p.read("b", s.path_loss.b);
    p.read("c", s.path_loss.c);
    p.read("ue_height_coeff", s.path_loss.ue_height_coeff);
  });
  r.read("shadowing_std_db", s.shadowing_std_db);
  r.read("n_clusters", s.n_clusters);
  r.read("rays_per_cluster", s.rays_per_cluster);
  r.read("cluster_asd_deg", s.cluster_asd_deg);
  r.read("cluster_asa_deg", s.cluster_asa_deg);
  r.read("cluster_zsd_deg", s.cluster_zsd_deg);
  r.read("cluster_zsa_deg", s.cluster_zsa_deg);
  r.read("ray_asd_deg", s.ray_asd_deg);
  r.read("ray_asa_deg", s.ray_asa_deg);
  r.read("ray_zsd_deg", s.ray_zsd_deg);
  r.read("ray_zsa_deg", s.ray_zsa_deg);
  r.read("delay_spread_s", s.delay_spread_s);
  r.read("delay_scaling", s.delay_scaling);
  detail::with_field(r.path(), [&] { validate(s, r.path()); });
}

inline void read_into(detail::ObjectReader& r, ScenarioProfile& p) {
  r.read("los_d1_m", p.los_d1_m);
  r.read("los_d2_m", p.los_d2_m);
  r.read("k_factor_db", p.k_factor_db);
  r.read_object("los", [&](detail::ObjectReader& s) { read_into(s, p.los); });
  r.read_object("nlos", [&](detail::ObjectReader& s) { read_into(s, p.nlos); });
}

/// Reads the SimConfig keys of a JSON object on top of `c`; absent keys keep
/// their current values.
inline void read_into(detail::ObjectReader& r, SimConfig& c) {
  std::string s = to_string(c.scenario);
  r.read("scenario", s);
  detail::with_field(detail::join_path(r.path(), "scenario"), [&] { c.scenario = scenario_from_string(s); });
  r.read("d_m", c.d_m);
  r.read("n_ue", c.n_ue);
  r.read("n_sectors", c.n_sectors);
  r.read("n_panels", c.n_panels);
  std::string bf = to_string(c.beamforming);
  r.read("beamforming", bf);
  detail::with_field(detail::join_path(r.path(), "beamforming"), [&] { c.beamforming = beamforming_from_string(bf); });
  r.read("seed", c.seed);
  r.read("sim_duration_s", c.sim_duration_s);
  r.read("step_dt_s", c.step_dt_s);
  r.read("bandwidth_hz", c.bandwidth_hz);
  r.read("carrier_hz", c.carrier_hz);
  r.read("noise_figure_db", c.noise_figure_db);
  r.read("outage_db", c.outage_db);
  r.read("hysteresis_db", c.hysteresis_db);
  r.read("max_phy_rate_bps", c.max_phy_rate_bps);
  r.read("source_rate_bps", c.source_rate_bps);
  r.read("spectral_efficiency", c.spectral_efficiency);
  r.read("tx_power_dbm", c.tx_power_dbm);
  r.read("gnb_height_m", c.gnb_height_m);
  r.read("ue_height_m", c.ue_height_m);
  r.read("ue_speed_min_mps", c.ue_speed_min_mps);
  r.read("ue_speed_max_mps", c.ue_speed_max_mps);
  r.read("walk_epoch_s", c.walk_epoch_s);
  r.read("coherence_period_s", c.coherence_period_s);
  r.read("los_update_period_s", c.los_update_period_s);
  r.read("gnb_zeta_deg", c.gnb_zeta_deg);
  r.read("ue_zeta_deg", c.ue_zeta_deg);
  r.read_object("gnb_array", [&](detail::ObjectReader& a) { read_into(a, c.gnb_array); });
  r.read_object("ue_array", [&](detail::ObjectReader& a) { read_into(a, c.ue_array); });
  r.read_object("profiles", [&](detail::ObjectReader& p) {
    p.read_object("UMi", [&](detail::ObjectReader& q) { read_into(q, c.umi); });
    p.read_object("UMa", [&](detail::ObjectReader& q) { read_into(q, c.uma); });
  });
}

/// Maps a validation message from validate(SimConfig) onto a ConfigError.
inline void validate_config(const SimConfig& c) {
  try {
    validate(c);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ConfigError::Kind::validation, e.what());
  }
}

/// A complete SimConfig from a JSON object: defaults for absent keys, unknown
/// keys rejected, result validated.
inline SimConfig sim_config_from_json(const ojson& j) {
  SimConfig c;
  detail::ObjectReader r(j, "");
  read_into(r, c);
  r.finish();
  validate_config(c);
  return c;
}

/// 1-based line and column of a byte offset in text.
inline std::pair<std::size_t, std::size_t> line_and_column(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

/// Parses JSON text; syntax errors become ConfigError with line information.
inline ojson parse_json_text(const std::string& text, const std::string& source) {
  try {
    return ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    const auto [line, col] = line_and_column(text, offset);
    throw ConfigError(ConfigError::Kind::parse, source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                                                    ": JSON parse error: " + e.what());
  }
}

}  // namespace mmw
