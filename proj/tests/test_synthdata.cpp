#include <gtest/gtest.h>

#include <cmath>

#include "agbmap/synthdata/field.hpp"
#include "agbmap/synthdata/scene.hpp"

using namespace agb;
using namespace agb::synthdata;

namespace {

SceneConfig small_config(std::uint64_t seed = 3) {
  SceneConfig c;
  c.extent_x = 10000;
  c.extent_y = 8000;
  c.residual.range = 2000;
  c.covariate_range = 4000;
  c.n_footprints = 200;
  c.n_plots = 60;
  c.plot_clusters = 6;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Field, GridFieldMoments) {
  const raster::GridGeometry g{128, 128, 0, 0, 100};
  const geostat::VariogramModel m{0.0, 4.0, 800.0};
  double s = 0, s2 = 0;
  int n = 0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    auto rng = make_rng(seed);
    const auto f = simulate_grid_field(g, m, rng);
    for (double v : f.values()) s += v, s2 += v * v, ++n;
  }
  EXPECT_NEAR(s / n, 0.0, 0.2);
  EXPECT_NEAR(s2 / n, 4.0, 0.6);
}

TEST(Field, GridFieldNeighborCorrelation) {
  const raster::GridGeometry g{128, 128, 0, 0, 100};
  const geostat::VariogramModel m{0.0, 1.0, 900.0};
  double num = 0, den = 0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    auto rng = make_rng(seed);
    const auto f = simulate_grid_field(g, m, rng);
    for (int r = 0; r < 128; ++r)
      for (int c = 0; c + 1 < 128; ++c) num += f.at(r, c) * f.at(r, c + 1), den += 1;
  }
  EXPECT_NEAR(num / den, std::exp(-3.0 * 100 / 900), 0.1);
}

TEST(Field, PointFieldWithNuggetOnly) {
  std::vector<Point2> pts;
  for (int i = 0; i < 400; ++i) pts.push_back({i * 10.0, 0.0});
  auto rng = make_rng(1);
  const auto v = simulate_point_field(pts, {9.0, 0.0, 100.0}, rng);
  double s2 = 0, lag1 = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    s2 += v[i] * v[i];
    if (i) lag1 += v[i] * v[i - 1];
  }
  EXPECT_NEAR(s2 / 400, 9.0, 1.8);
  EXPECT_NEAR(lag1 / 399, 0.0, 1.5);
}

TEST(Scene, DeterministicForASeed) {
  const auto a = generate_scene(small_config());
  set_thread_limit(1);
  const auto b = generate_scene(small_config());
  set_thread_limit(0);
  ASSERT_EQ(a.waveforms.size(), b.waveforms.size());
  for (std::size_t i = 0; i < a.waveforms.size(); ++i) {
    EXPECT_EQ(a.waveforms[i].intensities, b.waveforms[i].intensities);
    EXPECT_EQ(a.waveforms[i].lon, b.waveforms[i].lon);
  }
  EXPECT_EQ(a.truth_agb.values(), b.truth_agb.values());
  for (std::size_t i = 0; i < a.plots.size(); ++i) EXPECT_EQ(a.plots[i].agb_mg_ha, b.plots[i].agb_mg_ha);
  const auto c = generate_scene(small_config(4));
  EXPECT_NE(a.truth_agb.values(), c.truth_agb.values());
}

TEST(Scene, ExtentCountsAndFloor) {
  const auto cfg = small_config();
  const auto s = generate_scene(cfg);
  EXPECT_EQ(s.truth_agb.ncols(), 40);
  EXPECT_EQ(s.truth_agb.nrows(), 32);
  EXPECT_EQ(s.waveforms.size(), 200u);
  EXPECT_EQ(s.plots.size(), 60u);
  EXPECT_EQ(s.covariates.size(), cfg.coefficients.size() + 1);
  EXPECT_TRUE(s.covariates.contains("geol"));
  for (double v : s.truth_agb.values()) EXPECT_GE(v, cfg.agb_floor);
  for (const auto& w : s.waveforms) {
    EXPECT_GE(w.lon, 0.0);
    EXPECT_LT(w.lon, 10000.0);
    EXPECT_GE(w.lat, 0.0);
    EXPECT_LT(w.lat, 8000.0);
  }
  for (const auto& p : s.plots) EXPECT_TRUE(s.truth_agb.sample({p.lon, p.lat}));
  for (double g : s.covariates.band("geol").values()) {
    EXPECT_EQ(g, std::floor(g));
    EXPECT_GE(g, 0.0);
    EXPECT_LT(g, static_cast<double>(cfg.class_effects.size()));
  }
}

TEST(Scene, ZeroResidualLeavesTrend) {
  auto cfg = small_config();
  cfg.residual = {0.0, 0.0, 2000.0};
  const auto s = generate_scene(cfg);
  for (double v : s.residual.values()) EXPECT_EQ(v, 0.0);
  for (std::size_t i = 0; i < s.trend.size(); ++i)
    EXPECT_EQ(s.truth_agb.values()[i], std::max(s.trend.values()[i], cfg.agb_floor));
}

TEST(Scene, PlantedHeightsFollowTruth) {
  auto cfg = small_config();
  cfg.height_noise_sd = 0.0;
  const auto s = generate_scene(cfg);
  for (const auto& t : s.footprint_truth)
    EXPECT_NEAR(t.canopy_height, std::max(2.0, cfg.height_intercept + cfg.height_slope * t.agb), 1e-12);
}

TEST(Scene, ViolationsArePlantedAtTheConfiguredRate) {
  auto cfg = small_config();
  cfg.n_footprints = 1000;
  cfg.violation_rate = 0.2;
  const auto s = generate_scene(cfg);
  int planted = 0;
  for (std::size_t i = 0; i < s.waveforms.size(); ++i) {
    const auto& t = s.footprint_truth[i];
    const auto& w = s.waveforms[i];
    planted += t.planted != waveform::RejectReason::None;
    if (t.planted == waveform::RejectReason::Cloud) {
      EXPECT_NE(w.cloud_flag, 15);
    }
    if (t.planted == waveform::RejectReason::Saturated) {
      EXPECT_NE(w.sat_ndx, 0);
    }
    if (t.planted == waveform::RejectReason::None) {
      EXPECT_EQ(w.cloud_flag, 15);
      EXPECT_EQ(w.sat_ndx, 0);
    }
  }
  EXPECT_NEAR(planted / 1000.0, 0.2, 0.04);
}

TEST(Scene, JsonRoundTripAndValidation) {
  auto cfg = small_config(9);
  cfg.residual.nugget = 12.5;
  const auto back = scene_config_from_json(to_json(cfg));
  EXPECT_EQ(to_json(back), to_json(cfg));
  auto j = to_json(cfg);
  j["bogus"] = 1;
  EXPECT_THROW(scene_config_from_json(j), Error);
  auto k = to_json(cfg);
  k["structure_jitter"] = 1.5;
  EXPECT_THROW(scene_config_from_json(k), Error);
  auto l = to_json(cfg);
  l["cellsize"] = "big";
  EXPECT_THROW(scene_config_from_json(l), Error);
}
