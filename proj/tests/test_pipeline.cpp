#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "agbmap/pipeline/calibration.hpp"
#include "agbmap/pipeline/config.hpp"
#include "agbmap/pipeline/mapping.hpp"
#include "agbmap/pipeline/run.hpp"
#include "agbmap/synthdata/scene.hpp"

using namespace agb;
using namespace agb::pipeline;

namespace {

std::vector<allometry::PlotRecord> plots_at(const std::vector<Point2>& xy, const std::vector<double>& agb) {
  std::vector<allometry::PlotRecord> out;
  for (std::size_t i = 0; i < xy.size(); ++i) {
    allometry::PlotRecord p;
    p.id = "p" + std::to_string(i);
    p.lon = xy[i].x;
    p.lat = xy[i].y;
    p.agb_mg_ha = agb[i];
    out.push_back(p);
  }
  return out;
}

// footprints co-located with plots whose AGB is exactly 5 * TCH; the other
// metrics are unrelated
struct Paired {
  std::vector<allometry::PlotRecord> plots;
  std::vector<waveform::FootprintMetrics> footprints;
};

Paired five_tch(std::size_t n, std::uint64_t seed) {
  auto rng = make_rng(seed);
  Paired p;
  std::vector<Point2> xy;
  std::vector<double> agb;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 at{1000.0 * i, 0.0};
    waveform::FootprintMetrics f;
    f.id = "f" + std::to_string(i);
    f.lon = at.x + 10;
    f.lat = at.y;
    f.metrics.tch = uniform(rng, 5, 40);
    f.metrics.wext = uniform(rng, 10, 50);
    f.metrics.lead = uniform(rng, 0, 5);
    f.metrics.trail = uniform(rng, 0, 5);
    for (auto& h : f.metrics.h) h = uniform(rng, 0, 30);
    f.metrics.ti = uniform(rng, 0, 20);
    f.metrics.slope = uniform(rng, 0, 10);
    xy.push_back(at);
    agb.push_back(5.0 * f.metrics.tch);
    p.footprints.push_back(f);
  }
  p.plots = plots_at(xy, agb);
  return p;
}

}  // namespace

TEST(Split, HalvesAreDisjointDeterministicAndOrdered) {
  std::vector<Point2> xy;
  std::vector<double> v;
  for (int i = 0; i < 101; ++i) xy.push_back({double(i), 0}), v.push_back(i);
  const auto plots = plots_at(xy, v);
  const auto s = split_plots(plots, 4);
  EXPECT_EQ(s.calibration.size(), 50u);
  EXPECT_EQ(s.validation.size(), 51u);
  std::set<std::string> ids;
  for (const auto& p : s.calibration) ids.insert(p.id);
  for (const auto& p : s.validation) {
    EXPECT_EQ(ids.count(p.id), 0u);
    ids.insert(p.id);
  }
  EXPECT_EQ(ids.size(), 101u);
  for (std::size_t i = 1; i < s.calibration.size(); ++i) EXPECT_LT(s.calibration[i - 1].lon, s.calibration[i].lon);
  const auto again = split_plots(plots, 4);
  for (std::size_t i = 0; i < s.calibration.size(); ++i) EXPECT_EQ(again.calibration[i].id, s.calibration[i].id);
  const auto other = split_plots(plots, 5);
  bool differs = false;
  for (std::size_t i = 0; i < s.calibration.size(); ++i) differs |= other.calibration[i].id != s.calibration[i].id;
  EXPECT_TRUE(differs);
}

TEST(Calibration, RecoversFiveTimesTch) {
  const auto p = five_tch(60, 1);
  const auto pairs = pair_plots(p.plots, p.footprints, 50);
  ASSERT_EQ(pairs.size(), 60u);
  const auto m = fit_glas_agb_model(pair_design(p.plots, p.footprints, pairs));
  ASSERT_EQ(m.selected_features, std::vector<std::string>{"tch"});
  EXPECT_NEAR(m.coefficients[0], 5.0, 1e-9);
  EXPECT_NEAR(m.intercept, 0.0, 1e-8);
  const auto pred = predict_footprints(m, p.footprints);
  for (std::size_t i = 0; i < p.footprints.size(); ++i)
    EXPECT_NEAR(pred.samples.values[i], 5.0 * p.footprints[i].metrics.tch, 1e-8);
  EXPECT_EQ(pred.n_clamped, 0u);
}

TEST(Calibration, InsufficientPairs) {
  const auto p = five_tch(20, 2);
  const auto pairs = pair_plots(p.plots, p.footprints, 50);
  try {
    fit_glas_agb_model(pair_design(p.plots, p.footprints, pairs));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InsufficientPairs);
  }
}

TEST(Calibration, EmptyPredictionAndClamp) {
  regression::LinearModel m;
  m.intercept = -10;
  EXPECT_TRUE(predict_footprints(m, {}).ids.empty());
  const auto p = five_tch(3, 3);
  const auto pred = predict_footprints(m, p.footprints);
  EXPECT_EQ(pred.n_clamped, 3u);
  for (double v : pred.samples.values) EXPECT_EQ(v, 0.0);
}

TEST(Sweep, NoPairsAndDuplicateDistances) {
  const auto p = five_tch(40, 4);
  try {
    calibration_sweep(p.plots, p.footprints, {5.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoPairs);
  }
  const auto rows = calibration_sweep(p.plots, p.footprints, {50.0, 50.0, 2000.0}, 5, 1);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].n_pairs, rows[1].n_pairs);
  EXPECT_EQ(rows[0].r2, rows[1].r2);
  EXPECT_EQ(rows[0].rmse, rows[1].rmse);
  EXPECT_GT(rows[0].r2, 0.999);
  EXPECT_EQ(rows[2].n_pairs, 40u);
}

TEST(Sweep, TooFewPairsGiveNan) {
  const auto p = five_tch(3, 5);
  const auto rows = calibration_sweep(p.plots, p.footprints, {50.0});
  EXPECT_EQ(rows[0].n_pairs, 3u);
  EXPECT_TRUE(std::isnan(rows[0].r2));
}

TEST(Validate, HandBuiltCells) {
  const raster::GridGeometry g{2, 2, 0, 0, 1000};
  raster::Grid map(g, -9999.0, std::vector<double>{100, 200, 300, -9999});
  std::vector<Point2> xy;
  std::vector<double> v;
  // four plots in (0,0), three in (0,1), four in the nodata cell (1,1)
  for (int i = 0; i < 4; ++i) xy.push_back({100.0 + i, 1900}), v.push_back(90 + 5 * i);
  for (int i = 0; i < 3; ++i) xy.push_back({1100.0 + i, 1900}), v.push_back(200);
  for (int i = 0; i < 4; ++i) xy.push_back({1100.0 + i, 100}), v.push_back(1);
  xy.push_back({-50, -50}), v.push_back(7);
  const auto plots = plots_at(xy, v);
  const auto r = validate_map(map, plots, 4);
  ASSERT_EQ(r.n_cells, 1u);
  EXPECT_EQ(r.cells[0].observed, 97.5);
  EXPECT_EQ(r.cells[0].predicted, 100.0);
  EXPECT_DOUBLE_EQ(r.rmsep, 2.5);
  const auto r3 = validate_map(map, plots, 3);
  EXPECT_EQ(r3.n_cells, 2u);
  try {
    validate_map(map, plots, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoQualifyingCells);
  }
}

TEST(Validate, QualifyingCellsShrinkWithMinCount) {
  const raster::GridGeometry g{10, 10, 0, 0, 100};
  raster::Grid map(g, -9999.0, 50.0);
  auto rng = make_rng(6);
  std::vector<Point2> xy;
  std::vector<double> v;
  for (int i = 0; i < 400; ++i) xy.push_back({uniform(rng, 0, 1000), uniform(rng, 0, 1000)}), v.push_back(50);
  const auto plots = plots_at(xy, v);
  std::size_t prev = SIZE_MAX;
  for (int k = 1; k <= 8; ++k) {
    std::size_t n = 0;
    try {
      n = validate_map(map, plots, k).n_cells;
    } catch (const Error&) {
    }
    EXPECT_LE(n, prev);
    prev = n;
  }
}

TEST(Map, ExactLinearTrendLeavesNothingToKrige) {
  const raster::GridGeometry g{20, 20, 0, 0, 500};
  raster::Grid a(g), b(g);
  auto rng = make_rng(7);
  for (std::size_t i = 0; i < a.size(); ++i) a.values()[i] = uniform(rng, 0, 1), b.values()[i] = uniform(rng, 0, 1);
  raster::GridStack cov;
  cov.add("a", a);
  cov.add("b", b);
  geostat::SampleSet s;
  for (int i = 0; i < 300; ++i) {
    const Point2 p{uniform(rng, 0, 10000), uniform(rng, 0, 10000)};
    s.add(p, 100 + 40 * a.sample(p).value() - 20 * b.sample(p).value());
  }
  MapOptions o;
  o.trend = TrendKind::Linear;
  o.categorical = {};
  const auto m = build_map(s, cov, 500, o);
  for (std::size_t i = 0; i < m.agb.size(); ++i) {
    EXPECT_NEAR(m.agb.values()[i], m.trend.values()[i], 1e-6);
    EXPECT_NEAR(m.trend.values()[i], 100 + 40 * a.values()[i] - 20 * b.values()[i], 1e-8);
  }
  EXPECT_TRUE(m.variogram_failed);
  EXPECT_THROW(build_map(s, cov, 1000, o), Error);
}

TEST(Map, ResampleCovariatesUsesModeForClasses) {
  const raster::GridGeometry g{2, 2, 0, 0, 250};
  raster::GridStack s;
  s.add("c1", raster::Grid(g, -9999.0, std::vector<double>{1, 2, 3, 4}));
  s.add("geol", raster::Grid(g, -9999.0, std::vector<double>{2, 2, 1, 3}));
  const auto r = resample_covariates(s, 500);
  EXPECT_EQ(r.band("c1").at(0, 0), 2.5);
  EXPECT_EQ(r.band("geol").at(0, 0), 2.0);
}

TEST(Config, UnknownKeysRejectedAndHashStable) {
  RunConfig c;
  c.waveforms = "w.ndjson";
  c.dem = "dem.asc";
  c.plots = "plots.csv";
  c.covariates = {{"c1", "c1.asc"}};
  const auto j = to_json(c);
  const auto back = run_config_from_json(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(config_hash(back), config_hash(c));
  auto d = c;
  d.seed = 1;
  EXPECT_NE(config_hash(d), config_hash(c));
  for (const char* path : {"/bogus", "/forest/bogus", "/signal/bogus", "/filter/bogus"}) {
    auto k = j;
    k[nlohmann::json::json_pointer(path)] = 1;
    EXPECT_THROW(run_config_from_json(k), Error) << path;
  }
  auto cov = j;
  cov["covariates"][0]["extra"] = "x";
  EXPECT_THROW(run_config_from_json(cov), Error);
  auto bad = j;
  bad["trend"] = "svm";
  EXPECT_THROW(run_config_from_json(bad).validate(), Error);
  auto wrong_type = j;
  wrong_type["cv_folds"] = "ten";
  EXPECT_THROW(run_config_from_json(wrong_type), Error);
}

TEST(Config, ResolvePathsAnchorsRelative) {
  RunConfig c;
  c.waveforms = "in/w.ndjson";
  c.dem = "/abs/dem.asc";
  c.out_dir = "run";
  c.covariates = {{"c1", "c1.asc"}};
  resolve_paths(c, "/data/scene");
  EXPECT_EQ(c.waveforms, "/data/scene/in/w.ndjson");
  EXPECT_EQ(c.dem, "/abs/dem.asc");
  EXPECT_EQ(c.out_dir, "/data/scene/run");
  EXPECT_EQ(c.covariates[0].path, "/data/scene/c1.asc");
}

TEST(Run, SmallSceneEndToEnd) {
  namespace fs = std::filesystem;
  synthdata::SceneConfig sc;
  sc.extent_x = sc.extent_y = 12000;
  sc.residual.range = 2500;
  sc.covariate_range = 5000;
  sc.n_footprints = 600;
  sc.n_plots = 200;
  sc.plot_clusters = 20;
  sc.seed = 5;
  const auto scene = synthdata::generate_scene(sc);
  const fs::path dir = fs::temp_directory_path() / "agbmap_test_run";
  fs::remove_all(dir);
  synthdata::write_scene(scene, dir);

  RunConfig c;
  c.waveforms = (dir / "waveforms.ndjson").string();
  c.dem = (dir / "dem.asc").string();
  c.plots = (dir / "plots.csv").string();
  for (const auto& n : scene.covariates.names()) c.covariates.push_back({n, (dir / (n + ".asc")).string()});
  c.out_dir = (dir / "run").string();
  c.grid_sizes = {1000};
  c.forest.n_trees = 50;
  c.importance_repetitions = 5;
  c.seed = 3;
  const auto r = run_pipeline(c);
  EXPECT_EQ(r.n_waveforms, 600u);
  std::size_t rejected = 0;
  for (const auto& [k, v] : r.rejects) rejected += v;
  EXPECT_EQ(r.n_kept + rejected, 600u);
  EXPECT_EQ(text::CsvTable::read((dir / "run" / "metrics.csv").string()).size(), r.n_kept);
  ASSERT_EQ(r.grids.size(), 1u);
  for (const auto& [name, hash] : r.manifest["outputs"].items()) {
    EXPECT_TRUE(fs::exists(dir / "run" / name)) << name;
    EXPECT_EQ(file_fingerprint(dir / "run" / name), hash.get<std::string>());
  }
  EXPECT_TRUE(fs::exists(dir / "run" / "run_manifest.json"));
  EXPECT_EQ(text::CsvTable::read((dir / "run" / "carbon_1000.csv").string()).size(), 1u);
  fs::remove_all(dir);
}
