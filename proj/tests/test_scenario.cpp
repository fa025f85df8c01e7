#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "mmw/scenario.hpp"

using namespace mmw;

namespace {

Deployment single_ue(double x, double y, double vx, double vy, double d = 100.0) {
  SimConfig cfg;
  cfg.d_m = d;
  cfg.n_ue = 1;
  Deployment dep = build_deployment(cfg, StreamFactory(1));
  UeNode& ue = dep.ues[0];
  ue.position = {x, y, 1.5};
  ue.vx = vx;
  ue.vy = vy;
  ue.speed_mps = std::hypot(vx, vy);
  dep.walk_epoch_s = 1e9;  // keep the heading fixed
  return dep;
}

UeNode ue_with_panels(int n, double orientation, Vec3 pos) {
  UeNode ue;
  ue.n_panels = n;
  ue.orientation_deg = orientation;
  ue.position = pos;
  return ue;
}

GnbNode gnb_with_sectors(int n, Vec3 pos) {
  GnbNode g;
  g.n_sectors = n;
  g.position = pos;
  return g;
}

}  // namespace

TEST(Deployment, GnbGeometry) {
  SimConfig cfg;
  cfg.d_m = 100.0;
  const Deployment dep = build_deployment(cfg, StreamFactory(3));
  ASSERT_EQ(dep.gnbs.size(), 5u);
  const double expect[5][2] = {{0, 0}, {100, 0}, {0, 100}, {100, 100}, {50, 50}};
  for (int i = 0; i < 5; ++i) {
    EXPECT_DOUBLE_EQ(dep.gnbs[i].position.x, expect[i][0]);
    EXPECT_DOUBLE_EQ(dep.gnbs[i].position.y, expect[i][1]);
    EXPECT_DOUBLE_EQ(dep.gnbs[i].position.z, 10.0);
    EXPECT_DOUBLE_EQ(dep.gnbs[i].tx_power_dbm, 30.0);
    ASSERT_EQ(dep.gnbs[i].sectors.size(), 3u);
    for (int s = 0; s < 3; ++s) EXPECT_NEAR(dep.gnbs[i].sectors[s].boresight_azimuth_deg, 120.0 * s, 1e-12);
  }
}

TEST(Deployment, UesInsideWithValidSpeeds) {
  for (int n : {25, 50}) {
    SimConfig cfg;
    cfg.n_ue = n;
    cfg.d_m = 200.0;
    const Deployment dep = build_deployment(cfg, StreamFactory(n));
    ASSERT_EQ(dep.ues.size(), static_cast<std::size_t>(n));
    for (const UeNode& ue : dep.ues) {
      EXPECT_TRUE(dep.bounds.contains(ue.position));
      EXPECT_GE(ue.speed_mps, 2.0);
      EXPECT_LE(ue.speed_mps, 4.0);
      EXPECT_NEAR(std::hypot(ue.vx, ue.vy), ue.speed_mps, 1e-9);
      EXPECT_DOUBLE_EQ(ue.position.z, 1.5);
      EXPECT_EQ(ue.serving, kOutage);
      ASSERT_EQ(ue.panels.size(), 2u);
      EXPECT_NEAR(angular_distance(ue.panels[1].boresight_azimuth_deg, ue.panels[0].boresight_azimuth_deg), 180.0,
                  1e-9);
    }
  }
}

TEST(Deployment, RejectsInvalidInputs) {
  SimConfig cfg;
  cfg.d_m = 40.0;
  EXPECT_THROW(build_deployment(cfg, StreamFactory(1)), std::invalid_argument);
  cfg.d_m = 501.0;
  EXPECT_THROW(build_deployment(cfg, StreamFactory(1)), std::invalid_argument);
  cfg.d_m = 100.0;
  cfg.n_ue = 0;
  EXPECT_THROW(build_deployment(cfg, StreamFactory(1)), std::invalid_argument);
}

TEST(Deployment, DeterministicPerSeed) {
  SimConfig cfg;
  const Deployment a = build_deployment(cfg, StreamFactory(77));
  const Deployment b = build_deployment(cfg, StreamFactory(77));
  const Deployment c = build_deployment(cfg, StreamFactory(78));
  for (std::size_t i = 0; i < a.ues.size(); ++i) {
    EXPECT_EQ(a.ues[i].position.x, b.ues[i].position.x);
    EXPECT_EQ(a.ues[i].vy, b.ues[i].vy);
  }
  EXPECT_NE(a.ues[0].position.x, c.ues[0].position.x);
}

TEST(Mobility, StraightLineAdvance) {
  const Deployment dep = step_mobility(single_ue(10.0, 50.0, 2.0, 0.0), 1.0, StreamFactory(1));
  EXPECT_NEAR(dep.ues[0].position.x, 12.0, 1e-12);
  EXPECT_NEAR(dep.ues[0].position.y, 50.0, 1e-12);
  EXPECT_NEAR(dep.time_s, 1.0, 1e-12);
}

TEST(Mobility, ReflectsAtBoundary) {
  const Deployment dep = step_mobility(single_ue(99.0, 50.0, 3.0, 0.0), 1.0, StreamFactory(1));
  EXPECT_NEAR(dep.ues[0].position.x, 98.0, 1e-12);
  EXPECT_NEAR(dep.ues[0].vx, -3.0, 1e-12);
  EXPECT_TRUE(dep.bounds.contains(dep.ues[0].position));
  const Deployment at_edge = step_mobility(single_ue(0.0, 0.0, -2.0, -2.0), 0.5, StreamFactory(1));
  EXPECT_NEAR(at_edge.ues[0].position.x, 1.0, 1e-12);
  EXPECT_NEAR(at_edge.ues[0].position.y, 1.0, 1e-12);
}

TEST(Mobility, RejectsNonPositiveStep) {
  EXPECT_THROW(step_mobility(single_ue(1, 1, 2, 0), 0.0, StreamFactory(1)), std::invalid_argument);
}

TEST(Mobility, HeadingRedrawnEachEpochSpeedKept) {
  SimConfig cfg;
  cfg.n_ue = 10;
  Deployment dep = build_deployment(cfg, StreamFactory(5));
  std::vector<double> vx0;
  for (const UeNode& ue : dep.ues) vx0.push_back(ue.vx);
  for (int k = 0; k < 10; ++k) dep = step_mobility(std::move(dep), 0.1, StreamFactory(5));
  int changed = 0;
  for (std::size_t i = 0; i < dep.ues.size(); ++i) {
    EXPECT_NEAR(std::hypot(dep.ues[i].vx, dep.ues[i].vy), dep.ues[i].speed_mps, 1e-9);
    if (std::abs(std::abs(dep.ues[i].vx) - std::abs(vx0[i])) > 1e-9) ++changed;
  }
  EXPECT_GE(changed, 8);
}

TEST(Mobility, LongRunBoundsAndCentredTimeAverage) {
  SimConfig cfg;
  cfg.n_ue = 20;
  cfg.d_m = 100.0;
  const StreamFactory streams(11);
  Deployment dep = build_deployment(cfg, streams);
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (int k = 0; k < 10000; ++k) {
    dep = step_mobility(std::move(dep), 0.1, streams);
    ASSERT_EQ(dep.ues.size(), 20u);
    for (const UeNode& ue : dep.ues) {
      ASSERT_TRUE(dep.bounds.contains(ue.position));
      sx += ue.position.x;
      sy += ue.position.y;
      ++n;
    }
  }
  EXPECT_NEAR(sx / static_cast<double>(n), 50.0, 10.0);
  EXPECT_NEAR(sy / static_cast<double>(n), 50.0, 10.0);
}

TEST(Association, Examples) {
  Deployment dep = single_ue(30, 30, 2, 0);
  dep = associate(std::move(dep), {{10.0, -20.0, -20.0, -20.0, -20.0}}, -5.0, 3.0);
  EXPECT_EQ(dep.ues[0].serving, 0);

  Deployment out = single_ue(30, 30, 2, 0);
  out = associate(std::move(out), {{-6.0, -6.0, -6.0, -6.0, -6.0}}, -5.0, 3.0);
  EXPECT_EQ(out.ues[0].serving, kOutage);

  Deployment hyst = single_ue(30, 30, 2, 0);
  hyst.ues[0].serving = 1;
  hyst = associate(std::move(hyst), {{11.0, 10.0, 0.0, 0.0, 0.0}}, -5.0, 3.0);
  EXPECT_EQ(hyst.ues[0].serving, 1);
  hyst = associate(std::move(hyst), {{13.5, 10.0, 0.0, 0.0, 0.0}}, -5.0, 3.0);
  EXPECT_EQ(hyst.ues[0].serving, 0);
}

TEST(Association, ServingBelowOutageSwitchesImmediately) {
  Deployment dep = single_ue(30, 30, 2, 0);
  dep.ues[0].serving = 2;
  dep = associate(std::move(dep), {{0.0, -1.0, -7.0, -9.0, -9.0}}, -5.0, 3.0);
  EXPECT_EQ(dep.ues[0].serving, 0);
}

TEST(Association, ErrorsOnIncompleteTable) {
  EXPECT_THROW(associate(single_ue(30, 30, 2, 0), {}, -5.0, 3.0), std::invalid_argument);
  EXPECT_THROW(associate(single_ue(30, 30, 2, 0), {{1.0, 2.0}}, -5.0, 3.0), std::invalid_argument);
}

TEST(Association, IdempotentAndWithinHysteresisOfBest) {
  SimConfig cfg;
  cfg.n_ue = 30;
  Deployment dep = build_deployment(cfg, StreamFactory(9));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(5.0, 8.0);
  for (int round = 0; round < 50; ++round) {
    SinrTable t(30, std::vector<double>(5));
    for (auto& row : t)
      for (double& v : row) v = g(rng);
    dep = associate(std::move(dep), t, -5.0, 3.0);
    const Deployment again = associate(dep, t, -5.0, 3.0);
    for (std::size_t u = 0; u < dep.ues.size(); ++u) {
      EXPECT_EQ(again.ues[u].serving, dep.ues[u].serving);
      const double best = *std::max_element(t[u].begin(), t[u].end());
      if (dep.ues[u].serving == kOutage) {
        EXPECT_LT(best, -5.0);
      } else {
        EXPECT_GE(t[u][static_cast<std::size_t>(dep.ues[u].serving)], best - 3.0);
      }
    }
  }
}

TEST(PanelSector, Examples) {
  const GnbNode g = gnb_with_sectors(3, {0, 0, 10});
  const UeNode east = ue_with_panels(2, 0.0, {50, 0, 1.5});
  EXPECT_EQ(select_panel_and_sector(east, g).sector, 0);
  // Panels at 0 and 180 degrees; the gNB is due west of the UE.
  EXPECT_EQ(select_panel_and_sector(east, g).panel, 1);
  const UeNode north = ue_with_panels(3, 30.0, {0, 50, 1.5});
  const PanelSector ps = select_panel_and_sector(north, g);
  EXPECT_EQ(ps.sector, 1);
  EXPECT_EQ(ps.panel, 2);  // boresights 30, 150, 270; gNB lies at 270
  EXPECT_THROW(select_panel_and_sector(ue_with_panels(2, 0, {0, 0, 1.5}), g), std::invalid_argument);
}

TEST(PanelSector, RoleSwapWithMirroredAzimuth) {
  for (int n = 1; n <= 4; ++n)
    for (double az = 0.5; az < 360.0; az += 1.0) {
      const double r = 40.0;
      const Vec3 a{0, 0, 10}, b{r * std::cos(deg_to_rad(az)), r * std::sin(deg_to_rad(az)), 1.5};
      const PanelSector fwd = select_panel_and_sector(ue_with_panels(n, 0.0, b), gnb_with_sectors(n, a));
      const PanelSector rev = select_panel_and_sector(ue_with_panels(n, 0.0, a), gnb_with_sectors(n, b));
      EXPECT_EQ(fwd.sector, rev.panel);
      EXPECT_EQ(fwd.panel, rev.sector);
      EXPECT_LE(angular_distance(az, sector_boresight(n, fwd.sector)), 180.0 / n + 1e-9);
      EXPECT_LE(angular_distance(az + 180.0, sector_boresight(n, fwd.panel)), 180.0 / n + 1e-9);
    }
}

TEST(Geometry, DirectionToPeer) {
  const Direction d = direction_to({0, 0, 10}, {100, 0, 1.5});
  EXPECT_NEAR(d.phi, 0.0, 1e-12);
  EXPECT_NEAR(d.theta, 90.0 + rad_to_deg(std::atan2(8.5, 100.0)), 1e-9);
  const Direction u = direction_to({100, 0, 1.5}, {0, 0, 10});
  EXPECT_NEAR(std::abs(u.phi), 180.0, 1e-12);
  EXPECT_NEAR(u.theta, 90.0 - rad_to_deg(std::atan2(8.5, 100.0)), 1e-9);
}
