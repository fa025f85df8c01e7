#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mmw/antenna.hpp"
#include "mmw/channel.hpp"
#include "mmw/rng.hpp"
#include "mmw/scenario.hpp"
#include "mmw/sim_config.hpp"

namespace mmw {

struct MetricsRecord {
  double time_s = 0.0;
  int ue_id = 0;
  int serving = kOutage;
  // Serving-link SINR; for OUTAGE users, the best candidate's SINR.
  double sinr_db = 0.0;
  double offered_rate_bps = 0.0;
  double achieved_rate_bps = 0.0;
  bool handover = false;
  // Beamformed gain of the serving (or best candidate) link, path loss excluded.
  double beamformed_gain_db = 0.0;

  bool operator==(const MetricsRecord&) const = default;
};

struct RunSummary {
  int n_steps = 0;
  int n_ues = 0;
  std::vector<double> ue_mean_throughput_bps;
  double mean_throughput_bps = 0.0;            // OUTAGE steps count as zero
  double mean_throughput_connected_bps = 0.0;  // OUTAGE steps excluded
  double p10_throughput_bps = 0.0;             // over per-UE means
  double mean_sinr_db = 0.0;                   // OUTAGE steps excluded
  double mean_sinr_all_db = 0.0;               // OUTAGE steps at best-candidate SINR
  std::vector<std::pair<int, double>> sinr_cdf;  // (percentile, dB), OUTAGE excluded
  double outage_fraction = 0.0;
  int handover_count = 0;
  double mean_beamformed_gain_db = 0.0;
  double max_gnb_rate_bps = 0.0;  // largest per-gNB aggregate over all steps
  double max_ue_rate_bps = 0.0;
};

struct RunResult {
  std::vector<MetricsRecord> records;
  RunSummary summary;
};

/// Linear-interpolated percentile (p in [0, 100]) of an ascending sample.
inline double percentile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double thermal_noise_dbm(double bandwidth_hz, double noise_figure_db) {
  return -174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
}

/// Rate of one UE under equal time sharing among n_attached UEs.
inline double throughput_model(std::optional<double> sinr_db, int n_attached, const SimConfig& cfg) {
  if (!sinr_db) return 0.0;
  if (n_attached < 1) throw std::invalid_argument("throughput_model: n_attached must be >= 1");
  const double n = n_attached;
  const double shannon = cfg.bandwidth_hz / n * std::log2(1.0 + db_to_linear(*sinr_db)) * cfg.spectral_efficiency;
  return std::min({cfg.source_rate_bps, cfg.max_phy_rate_bps / n, shannon});
}

// ---------------------------------------------------------------------------
// Per-step link evaluation
// ---------------------------------------------------------------------------

/// Channel realizations of all links, indexed [ue * n_gnb + gnb]. Ray angles
/// are link-relative; path loss and shadowing are the current large-scale
/// values.
struct ChannelSet {
  int n_gnb = 0;
  std::vector<ChannelRealization> links;

  const ChannelRealization& at(int ue, int gnb) const {
    return links[static_cast<std::size_t>(ue) * static_cast<std::size_t>(n_gnb) + static_cast<std::size_t>(gnb)];
  }
};

struct SinrEvaluation {
  SinrTable sinr_db;             // [ue][gnb]
  SinrTable signal_dbm;          // [ue][gnb]
  SinrTable beamformed_gain_db;  // [ue][gnb]
};

namespace detail {

constexpr double kSinrFloorDb = -300.0;

struct Beam {
  int array_index = 0;
  SteeringVector weights;
  // Present when the weights are a steering vector: scale * row[p] * col[q].
  std::optional<SignatureFactors> factors;
  double scale = 1.0;
};

class StepEvaluator {
public:
  StepEvaluator(const Deployment& dep, const ChannelSet& channels, const SimConfig& cfg)
      : dep_(dep), channels_(channels), cfg_(cfg), n_gnb_(static_cast<int>(dep.gnbs.size())),
        n_ue_(static_cast<int>(dep.ues.size())) {
    if (channels.n_gnb != n_gnb_ || channels.links.size() != static_cast<std::size_t>(n_gnb_ * n_ue_))
      throw std::invalid_argument("evaluate_sinr: missing channel realization for some link");
    for (const GnbNode& g : dep.gnbs) {
      sectors_.push_back(element_arrays(g.sectors));
      max_sectors_ = std::max(max_sectors_, g.sectors.size());
    }
    for (const UeNode& ue : dep.ues) {
      panels_.push_back(element_arrays(ue.panels));
      max_panels_ = std::max(max_panels_, ue.panels.size());
    }
    const std::size_t n = channels.links.size();
    rays_.resize(n);
    tx_angles_.resize(n);
    rx_angles_.resize(n);
    tx_beam_.resize(n);
    rx_beam_.resize(n);
    tx_tables_.resize(n * max_sectors_);
    rx_tables_.resize(n * max_panels_);
    for (int u = 0; u < n_ue_; ++u)
      for (int g = 0; g < n_gnb_; ++g) prepare_link(u, g);
  }

  SinrEvaluation evaluate(std::uint64_t round_robin) {
    std::vector<std::vector<int>> attached(static_cast<std::size_t>(n_gnb_));
    for (const UeNode& ue : dep_.ues)
      if (ue.serving != kOutage) attached[static_cast<std::size_t>(ue.serving)].push_back(ue.id);
    std::vector<int> target(static_cast<std::size_t>(n_gnb_), -1);
    for (int g = 0; g < n_gnb_; ++g) {
      auto& list = attached[static_cast<std::size_t>(g)];
      if (list.empty()) continue;
      std::sort(list.begin(), list.end());
      target[static_cast<std::size_t>(g)] = list[round_robin % list.size()];
    }

    const double noise_mw = db_to_linear(thermal_noise_dbm(cfg_.bandwidth_hz, cfg_.noise_figure_db));
    SinrEvaluation out;
    out.sinr_db.assign(static_cast<std::size_t>(n_ue_), std::vector<double>(static_cast<std::size_t>(n_gnb_)));
    out.signal_dbm = out.sinr_db;
    out.beamformed_gain_db = out.sinr_db;

    for (int u = 0; u < n_ue_; ++u) {
      // Transmit-side responses of every active gNB's current beam, evaluated
      // on the rays of its link to u.
      std::vector<std::optional<EndResponse>> interferer_tx(static_cast<std::size_t>(n_gnb_));
      for (int g2 = 0; g2 < n_gnb_; ++g2) {
        const int v = target[static_cast<std::size_t>(g2)];
        if (v < 0) continue;
        interferer_tx[static_cast<std::size_t>(g2)] = tx_response(u, g2, tx_beam_[idx(v, g2)]);
      }
      for (int g = 0; g < n_gnb_; ++g) {
        const Beam& rx_beam = rx_beam_[idx(u, g)];
        const auto& rays = rays_[idx(u, g)];
        const double gain = combine_responses(rays, tx_response(u, g, tx_beam_[idx(u, g)]), rx_response(u, g, rx_beam));
        const double gain_db = std::max(linear_to_db(gain), kGainFloorDb);
        const ChannelRealization& ch = channels_.at(u, g);
        const double signal_dbm =
            dep_.gnbs[static_cast<std::size_t>(g)].tx_power_dbm + gain_db - ch.path_loss_db - ch.shadowing_db;
        // Interference from the other active gNBs, received on the g-facing beam.
        double interference_mw = 0.0;
        for (int g2 = 0; g2 < n_gnb_; ++g2) {
          if (g2 == g || !interferer_tx[static_cast<std::size_t>(g2)]) continue;
          const double ig =
              combine_responses(rays_[idx(u, g2)], *interferer_tx[static_cast<std::size_t>(g2)], rx_response(u, g2, rx_beam));
          const ChannelRealization& ich = channels_.at(u, g2);
          const double p_dbm = dep_.gnbs[static_cast<std::size_t>(g2)].tx_power_dbm +
                               std::max(linear_to_db(ig), kGainFloorDb) - ich.path_loss_db - ich.shadowing_db;
          interference_mw += db_to_linear(p_dbm);
        }
        const double sinr = db_to_linear(signal_dbm) / (noise_mw + interference_mw);
        const auto ui = static_cast<std::size_t>(u);
        const auto gi = static_cast<std::size_t>(g);
        out.sinr_db[ui][gi] = std::max(linear_to_db(sinr), kSinrFloorDb);
        out.signal_dbm[ui][gi] = signal_dbm;
        out.beamformed_gain_db[ui][gi] = gain_db;
      }
    }
    return out;
  }

private:
  std::size_t idx(int u, int g) const {
    return static_cast<std::size_t>(u) * static_cast<std::size_t>(n_gnb_) + static_cast<std::size_t>(g);
  }

  bool optimal() const { return cfg_.beamforming == BeamformingMode::optimal_isotropic; }

  // Arrays as evaluated: isotropic elements in the optimal-beamforming mode.
  std::vector<ArrayConfig> element_arrays(const std::vector<ArrayConfig>& arrays) const {
    std::vector<ArrayConfig> out = arrays;
    if (optimal())
      for (ArrayConfig& c : out) c = with_isotropic_elements(c);
    return out;
  }

  const ArrayConfig& sector(int g, int s) const {
    return sectors_[static_cast<std::size_t>(g)][static_cast<std::size_t>(s)];
  }
  const ArrayConfig& panel(int u, int p) const {
    return panels_[static_cast<std::size_t>(u)][static_cast<std::size_t>(p)];
  }

  const ArrayRayTable& tx_table(int u, int g, int s) {
    auto& slot = tx_tables_[idx(u, g) * max_sectors_ + static_cast<std::size_t>(s)];
    if (!slot) slot = ray_table(tx_angles_[idx(u, g)], sector(g, s), cfg_.gnb_zeta_deg);
    return *slot;
  }

  const ArrayRayTable& rx_table(int u, int g, int p) {
    auto& slot = rx_tables_[idx(u, g) * max_panels_ + static_cast<std::size_t>(p)];
    if (!slot) slot = ray_table(rx_angles_[idx(u, g)], panel(u, p), cfg_.ue_zeta_deg);
    return *slot;
  }

  // Response of gNB g's beam on the rays of link (u, g).
  EndResponse tx_response(int u, int g, const Beam& beam) {
    const ArrayRayTable& t = tx_table(u, g, beam.array_index);
    if (beam.factors) return end_response_separable(t, true, *beam.factors, beam.scale);
    return end_response(t, true, sector(g, beam.array_index), beam.weights);
  }

  // Response of UE u's beam on the rays of link (u, g).
  EndResponse rx_response(int u, int g, const Beam& beam) {
    const ArrayRayTable& t = rx_table(u, g, beam.array_index);
    if (beam.factors) return end_response_separable(t, false, *beam.factors, beam.scale);
    return end_response(t, false, panel(u, beam.array_index), beam.weights);
  }

  static Beam steering_beam(int index, const ArrayConfig& cfg, const Direction& local) {
    Beam b;
    b.array_index = index;
    b.weights = steering_vector(cfg, local);
    b.factors = signature_factors(cfg, local);
    b.scale = 1.0 / std::sqrt(static_cast<double>(cfg.size()));
    return b;
  }

  void prepare_link(int u, int g) {
    const UeNode& ue = dep_.ues[static_cast<std::size_t>(u)];
    const GnbNode& gnb = dep_.gnbs[static_cast<std::size_t>(g)];
    const LinkGeometry geo{direction_to(gnb.position, ue.position), direction_to(ue.position, gnb.position)};
    const ChannelRealization world = anchor(channels_.at(u, g), geo);
    auto& rays = rays_[idx(u, g)];
    rays.clear();
    for (const Cluster& c : world.clusters) rays.insert(rays.end(), c.rays.begin(), c.rays.end());
    tx_angles_[idx(u, g)] = ray_angles(rays, true);
    rx_angles_[idx(u, g)] = ray_angles(rays, false);

    const PanelSector ps = select_panel_and_sector(ue, gnb);
    const ArrayConfig& sec = sector(g, ps.sector);
    const ArrayConfig& pan = panel(u, ps.panel);
    if (optimal()) {
      BeamPair bp = dominant_beams(channel_matrix(rays, sec, pan));
      tx_beam_[idx(u, g)] = Beam{ps.sector, std::move(bp.tx), std::nullopt, 1.0};
      rx_beam_[idx(u, g)] = Beam{ps.panel, std::move(bp.rx), std::nullopt, 1.0};
    } else {
      tx_beam_[idx(u, g)] = steering_beam(ps.sector, sec, to_local(geo.departure, sec));
      rx_beam_[idx(u, g)] = steering_beam(ps.panel, pan, to_local(geo.arrival, pan));
    }
  }

  const Deployment& dep_;
  const ChannelSet& channels_;
  const SimConfig& cfg_;
  int n_gnb_;
  int n_ue_;
  std::size_t max_sectors_ = 1;
  std::size_t max_panels_ = 1;
  std::vector<std::vector<Ray>> rays_;
  std::vector<std::vector<RayAngles>> tx_angles_;
  std::vector<std::vector<RayAngles>> rx_angles_;
  std::vector<Beam> tx_beam_;
  std::vector<Beam> rx_beam_;
  std::vector<std::vector<ArrayConfig>> sectors_;
  std::vector<std::vector<ArrayConfig>> panels_;
  std::vector<std::optional<ArrayRayTable>> tx_tables_;
  std::vector<std::optional<ArrayRayTable>> rx_tables_;
};

}  // namespace detail

/// SINR of every (UE, candidate gNB) pair. Each gNB with attached UEs (per
/// dep's serving ids) interferes with the beam toward one of them, picked
/// round-robin by the given counter; the victim listens on its beam toward
/// the candidate.
inline SinrEvaluation evaluate_sinr(const Deployment& dep, const ChannelSet& channels, const SimConfig& cfg,
                                    std::uint64_t round_robin = 0) {
  detail::StepEvaluator ev(dep, channels, cfg);
  return ev.evaluate(round_robin);
}

// ---------------------------------------------------------------------------
// Simulation loop
// ---------------------------------------------------------------------------

class Simulator {
public:
  explicit Simulator(SimConfig cfg)
      : cfg_(std::move(cfg)), streams_(cfg_.seed), profile_(cfg_.profile()), n_steps_(cfg_.n_steps()) {
    validate(cfg_);
    if (cfg_.beamforming == BeamformingMode::optimal_isotropic) {
      cfg_.gnb_array = with_isotropic_elements(cfg_.gnb_array);
      cfg_.ue_array = with_isotropic_elements(cfg_.ue_array);
    }
    dep_ = build_deployment(cfg_, streams_);
    const std::size_t n_links = dep_.gnbs.size() * dep_.ues.size();
    channels_.n_gnb = static_cast<int>(dep_.gnbs.size());
    channels_.links.resize(n_links);
    links_.resize(n_links);
    ue_rate_sum_.assign(dep_.ues.size(), 0.0);
  }

  bool done() const { return step_ >= n_steps_; }
  int step_index() const { return step_; }
  const Deployment& deployment() const { return dep_; }
  Deployment& deployment() { return dep_; }
  const ChannelSet& channels() const { return channels_; }
  const std::vector<MetricsRecord>& records() const { return records_; }
  const SimConfig& config() const { return cfg_; }

  /// Advances one step: mobility, channel refresh, SINR, association,
  /// throughput, records.
  void step() {
    if (done()) return;
    if (step_ > 0) dep_ = step_mobility(std::move(dep_), cfg_.step_dt_s, streams_);
    const double t = step_ * cfg_.step_dt_s;
    refresh_channels(t);

    const auto rr = static_cast<std::uint64_t>(step_);
    SinrEvaluation eval;
    if (step_ == 0) {
      // No attachments yet: interference pattern from strongest-signal attachment.
      Deployment prior = dep_;
      const SinrEvaluation isolated = evaluate_sinr(with_no_serving(prior), channels_, cfg_, rr);
      for (std::size_t u = 0; u < prior.ues.size(); ++u) {
        const auto& row = isolated.signal_dbm[u];
        prior.ues[u].serving = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
      }
      eval = evaluate_sinr(prior, channels_, cfg_, rr);
    } else {
      eval = evaluate_sinr(dep_, channels_, cfg_, rr);
    }

    std::vector<int> before(dep_.ues.size());
    for (std::size_t u = 0; u < dep_.ues.size(); ++u) before[u] = dep_.ues[u].serving;
    dep_ = associate(std::move(dep_), eval.sinr_db, cfg_.outage_db, cfg_.hysteresis_db);

    std::vector<int> n_attached(dep_.gnbs.size(), 0);
    for (const UeNode& ue : dep_.ues)
      if (ue.serving != kOutage) ++n_attached[static_cast<std::size_t>(ue.serving)];

    std::vector<double> gnb_rate(dep_.gnbs.size(), 0.0);
    for (std::size_t u = 0; u < dep_.ues.size(); ++u) {
      const UeNode& ue = dep_.ues[u];
      const auto& row = eval.sinr_db[u];
      const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      const std::size_t link = ue.serving == kOutage ? best : static_cast<std::size_t>(ue.serving);
      MetricsRecord r;
      r.time_s = t;
      r.ue_id = ue.id;
      r.serving = ue.serving;
      r.sinr_db = row[link];
      r.offered_rate_bps = ue.source_rate_bps;
      r.handover = before[u] != kOutage && ue.serving != kOutage && before[u] != ue.serving;
      r.beamformed_gain_db = eval.beamformed_gain_db[u][link];
      if (ue.serving != kOutage) {
        r.achieved_rate_bps = throughput_model(r.sinr_db, n_attached[static_cast<std::size_t>(ue.serving)], cfg_);
        gnb_rate[static_cast<std::size_t>(ue.serving)] += r.achieved_rate_bps;
      }
      ue_rate_sum_[u] += r.achieved_rate_bps;
      max_ue_rate_ = std::max(max_ue_rate_, r.achieved_rate_bps);
      records_.push_back(r);
    }
    for (double rate : gnb_rate) max_gnb_rate_ = std::max(max_gnb_rate_, rate);
    ++step_;
  }

  RunResult run() {
    while (!done()) step();
    return {records_, summary()};
  }

  RunSummary summary() const {
    RunSummary s;
    s.n_steps = step_;
    if (step_ == 0) return s;
    s.n_ues = static_cast<int>(dep_.ues.size());
    for (double sum : ue_rate_sum_) s.ue_mean_throughput_bps.push_back(sum / step_);
    std::vector<double> per_ue = s.ue_mean_throughput_bps;
    std::sort(per_ue.begin(), per_ue.end());
    s.p10_throughput_bps = percentile(per_ue, 10.0);

    std::vector<double> sinr_connected;
    double rate_all = 0.0, rate_connected = 0.0, sinr_all = 0.0, gain_all = 0.0;
    int outage = 0;
    for (const MetricsRecord& r : records_) {
      rate_all += r.achieved_rate_bps;
      sinr_all += r.sinr_db;
      gain_all += r.beamformed_gain_db;
      if (r.serving == kOutage) {
        ++outage;
        continue;
      }
      rate_connected += r.achieved_rate_bps;
      sinr_connected.push_back(r.sinr_db);
      if (r.handover) ++s.handover_count;
    }
    const auto n = static_cast<double>(records_.size());
    s.mean_throughput_bps = rate_all / n;
    s.mean_sinr_all_db = sinr_all / n;
    s.mean_beamformed_gain_db = gain_all / n;
    s.outage_fraction = outage / n;
    if (!sinr_connected.empty()) {
      s.mean_throughput_connected_bps = rate_connected / static_cast<double>(sinr_connected.size());
      double acc = 0.0;
      for (double v : sinr_connected) acc += v;
      s.mean_sinr_db = acc / static_cast<double>(sinr_connected.size());
      std::sort(sinr_connected.begin(), sinr_connected.end());
      for (int p = 1; p <= 99; ++p) s.sinr_cdf.emplace_back(p, percentile(sinr_connected, p));
    }
    s.max_gnb_rate_bps = max_gnb_rate_;
    s.max_ue_rate_bps = max_ue_rate_;
    return s;
  }

private:
  struct LinkState {
    bool initialized = false;
    bool los = false;
    std::int64_t los_epoch = -1;
    double los_uniform = 0.0;
    std::uint64_t los_changes = 0;
    std::int64_t coherence_epoch = -1;
  };

  static Deployment& with_no_serving(Deployment& dep) {
    for (UeNode& ue : dep.ues) ue.serving = kOutage;
    return dep;
  }

  static std::int64_t epoch_of(double t, double period) {
    return static_cast<std::int64_t>(std::floor(t / period + 1e-9));
  }

  void refresh_channels(double t) {
    const int n_gnb = channels_.n_gnb;
    for (std::size_t u = 0; u < dep_.ues.size(); ++u) {
      for (int g = 0; g < n_gnb; ++g) {
        const std::size_t i = u * static_cast<std::size_t>(n_gnb) + static_cast<std::size_t>(g);
        LinkState& st = links_[i];
        ChannelRealization& ch = channels_.links[i];
        const Vec3& gp = dep_.gnbs[static_cast<std::size_t>(g)].position;
        const Vec3& up = dep_.ues[u].position;
        const std::uint64_t link_key = (static_cast<std::uint64_t>(g) << 32) | u;
        const double d2 = std::max(distance_2d(gp, up), 1e-3);
        const double d3 = std::max(distance_3d(gp, up), 1.0);

        const std::int64_t le = epoch_of(t, cfg_.los_update_period_s);
        if (le != st.los_epoch) {
          auto rng = streams_.stream(StreamTag::los, link_key, static_cast<std::uint64_t>(le));
          st.los_uniform = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
          st.los_epoch = le;
        }
        const bool los = los_from_uniform(profile_, d2, st.los_uniform);
        bool redraw = false;
        if (!st.initialized || los != st.los) {
          ++st.los_changes;
          st.los = los;
          auto rng = streams_.stream(StreamTag::shadowing, link_key, st.los_changes);
          ch.shadowing_db = draw_shadowing(profile_, los, rng);
          redraw = true;
        }
        const std::int64_t ce = epoch_of(t, cfg_.coherence_period_s);
        if (ce != st.coherence_epoch) redraw = true;
        if (redraw) {
          auto rng = streams_.stream(StreamTag::small_scale, link_key, static_cast<std::uint64_t>(ce), st.los_changes);
          const double shadow = ch.shadowing_db;
          ch = generate_realization(profile_, los, rng);
          ch.shadowing_db = shadow;
          st.coherence_epoch = ce;
        }
        st.initialized = true;
        ch.los = los;
        ch.path_loss_db = path_loss(profile_, los, d3, dep_.ues[u].position.z);
      }
    }
  }

  SimConfig cfg_;
  StreamFactory streams_;
  ScenarioProfile profile_;
  int n_steps_ = 0;
  int step_ = 0;
  Deployment dep_;
  ChannelSet channels_;
  std::vector<LinkState> links_;
  std::vector<MetricsRecord> records_;
  std::vector<double> ue_rate_sum_;
  double max_gnb_rate_ = 0.0;
  double max_ue_rate_ = 0.0;
};

inline RunResult run(const SimConfig& cfg) {
  Simulator sim(cfg);
  return sim.run();
}

}  // namespace mmw
