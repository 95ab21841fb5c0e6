#pragma once

// Seeded synthetic scenes with known ground truth: covariate rasters, a DEM,
// an AGB field (trend + exponential residual field), LiDAR waveforms whose
// canopy height is a known linear function of the local AGB, and field plots.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agbmap/allometry.hpp"
#include "agbmap/geostat/variogram.hpp"
#include "agbmap/parallel.hpp"
#include "agbmap/random.hpp"
#include "agbmap/raster/ascii_grid.hpp"
#include "agbmap/raster/grid.hpp"
#include "agbmap/synthdata/field.hpp"
#include "agbmap/text.hpp"
#include "agbmap/waveform/filter.hpp"
#include "agbmap/waveform/io.hpp"
#include "agbmap/waveform/types.hpp"

namespace agb::synthdata {

struct SceneConfig {
  double extent_x = 50000.0;
  double extent_y = 50000.0;
  double cellsize = 250.0;
  double origin_x = 0.0;
  double origin_y = 0.0;

  // trend: intercept + sum coef_i * c_i + class_effects[geol]
  double intercept = 280.0;
  std::vector<double> coefficients = {40.0, 30.0, -25.0, 0.0};
  std::vector<double> class_effects = {-30.0, 0.0, 20.0, 40.0};
  double covariate_range = 15000.0;
  geostat::VariogramModel residual{400.0, 2500.0, 3000.0};
  double agb_floor = 20.0;  ///< truth is clamped at this floor

  int n_footprints = 3000;
  int n_plots = 1000;
  int plot_clusters = 100;         ///< plots are grouped like inventory sites
  double cluster_radius = 400.0;   ///< m
  double plot_noise_sd = 20.0;

  // canopy height = height_intercept + height_slope * AGB + N(0, height_noise_sd)
  double height_intercept = 8.0;
  double height_slope = 0.08;
  double height_noise_sd = 1.0;

  double bin_size = 0.5;
  double background = 20.0;
  double ground_amplitude = 150.0;
  double canopy_amplitude = 100.0;
  double mid_amplitude = 60.0;
  double ground_sigma = 1.0;
  double canopy_sigma = 2.5;
  /// Per-footprint spread of the vertical profile: the mid return sits at
  /// 0.5 +- jitter/2 of the height and return amplitudes vary by +-jitter.
  double structure_jitter = 0.3;
  double waveform_noise = 0.01;  ///< noise SD as a fraction of the strongest return
  double violation_rate = 0.1;   ///< share of footprints planted with one rule violation

  std::uint64_t seed = 1;

  raster::GridGeometry geometry() const {
    return {static_cast<int>(std::lround(extent_x / cellsize)), static_cast<int>(std::lround(extent_y / cellsize)),
            origin_x, origin_y, cellsize};
  }

  void validate() const {
    auto ok = [](bool c, const std::string& what) {
      if (!c) fail(Errc::ConfigError, "scene config: " + what);
    };
    ok(extent_x > 0 && extent_y > 0 && cellsize > 0, "extent and cellsize must be > 0");
    ok(extent_x >= cellsize && extent_y >= cellsize, "extent must hold at least one cell");
    ok(residual.nugget >= 0 && residual.psill >= 0 && residual.range > 0, "residual variogram must be nonnegative");
    ok(residual.range < std::max(extent_x, extent_y), "residual range must be below the extent");
    ok(covariate_range > 0, "covariate_range must be > 0");
    ok(n_footprints >= 0 && n_plots >= 0, "counts must be >= 0");
    ok(plot_clusters >= 1 && cluster_radius >= 0, "plot_clusters must be >= 1 and cluster_radius >= 0");
    ok(2 * cluster_radius < std::min(extent_x, extent_y), "cluster_radius must fit inside the extent");
    ok(plot_noise_sd >= 0 && height_noise_sd >= 0 && waveform_noise >= 0, "noise levels must be >= 0");
    ok(height_slope > 0 && height_intercept >= 0, "height map must be increasing");
    ok(bin_size > 0 && background >= 0, "bin_size must be > 0");
    ok(ground_amplitude > mid_amplitude && mid_amplitude > 0 && canopy_amplitude > 0,
       "ground return must be the strongest of the lower two");
    ok(ground_sigma > 0 && canopy_sigma > 0, "return widths must be > 0");
    ok(structure_jitter >= 0 && structure_jitter < 1, "structure_jitter must be in [0, 1)");
    ok(ground_amplitude > mid_amplitude * (1 + structure_jitter), "ground return must stay above the mid return");
    ok(violation_rate >= 0 && violation_rate <= 1, "violation_rate must be in [0, 1]");
    ok(!class_effects.empty(), "class_effects must not be empty");
  }
};

inline nlohmann::json to_json(const SceneConfig& c) {
  nlohmann::json j;
  j["extent_x"] = c.extent_x;
  j["extent_y"] = c.extent_y;
  j["cellsize"] = c.cellsize;
  j["origin_x"] = c.origin_x;
  j["origin_y"] = c.origin_y;
  j["intercept"] = c.intercept;
  j["coefficients"] = c.coefficients;
  j["class_effects"] = c.class_effects;
  j["covariate_range"] = c.covariate_range;
  j["residual"] = {{"nugget", c.residual.nugget}, {"psill", c.residual.psill}, {"range", c.residual.range}};
  j["agb_floor"] = c.agb_floor;
  j["n_footprints"] = c.n_footprints;
  j["n_plots"] = c.n_plots;
  j["plot_clusters"] = c.plot_clusters;
  j["cluster_radius"] = c.cluster_radius;
  j["plot_noise_sd"] = c.plot_noise_sd;
  j["height_intercept"] = c.height_intercept;
  j["height_slope"] = c.height_slope;
  j["height_noise_sd"] = c.height_noise_sd;
  j["bin_size"] = c.bin_size;
  j["background"] = c.background;
  j["ground_amplitude"] = c.ground_amplitude;
  j["canopy_amplitude"] = c.canopy_amplitude;
  j["mid_amplitude"] = c.mid_amplitude;
  j["ground_sigma"] = c.ground_sigma;
  j["canopy_sigma"] = c.canopy_sigma;
  j["structure_jitter"] = c.structure_jitter;
  j["waveform_noise"] = c.waveform_noise;
  j["violation_rate"] = c.violation_rate;
  j["seed"] = c.seed;
  return j;
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline SceneConfig scene_config_from_json(const nlohmann::json& j) {
  SceneConfig c;
  const auto defaults = to_json(c);
  for (const auto& [key, value] : j.items())
    if (!defaults.contains(key)) fail(Errc::ConfigError, "unknown scene config key '" + key + "'");
  try {
    auto get = [&](const char* k, auto& dst) {
      if (j.contains(k)) dst = j.at(k).get<std::decay_t<decltype(dst)>>();
    };
    get("extent_x", c.extent_x);
    get("extent_y", c.extent_y);
    get("cellsize", c.cellsize);
    get("origin_x", c.origin_x);
    get("origin_y", c.origin_y);
    get("intercept", c.intercept);
    get("coefficients", c.coefficients);
    get("class_effects", c.class_effects);
    get("covariate_range", c.covariate_range);
    if (j.contains("residual")) {
      const auto& r = j.at("residual");
      c.residual.nugget = r.value("nugget", c.residual.nugget);
      c.residual.psill = r.value("psill", c.residual.psill);
      c.residual.range = r.value("range", c.residual.range);
    }
    get("agb_floor", c.agb_floor);
    get("n_footprints", c.n_footprints);
    get("n_plots", c.n_plots);
    get("plot_clusters", c.plot_clusters);
    get("cluster_radius", c.cluster_radius);
    get("plot_noise_sd", c.plot_noise_sd);
    get("height_intercept", c.height_intercept);
    get("height_slope", c.height_slope);
    get("height_noise_sd", c.height_noise_sd);
    get("bin_size", c.bin_size);
    get("background", c.background);
    get("ground_amplitude", c.ground_amplitude);
    get("canopy_amplitude", c.canopy_amplitude);
    get("mid_amplitude", c.mid_amplitude);
    get("ground_sigma", c.ground_sigma);
    get("canopy_sigma", c.canopy_sigma);
    get("structure_jitter", c.structure_jitter);
    get("waveform_noise", c.waveform_noise);
    get("violation_rate", c.violation_rate);
    get("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ConfigError, std::string("scene config: ") + e.what());
  }
  c.validate();
  return c;
}

/// What the generator planted for one footprint.
struct FootprintTruth {
  double agb = 0.0;            ///< truth AGB of the containing cell, Mg/ha
  double canopy_height = 0.0;  ///< canopy-top center above the ground center, m
  double ground_elev = 0.0;
  waveform::RejectReason planted = waveform::RejectReason::None;
};

struct Scene {
  SceneConfig config;
  raster::GridStack covariates;  ///< c1..cN continuous, "geol" categorical
  raster::Grid dem;
  raster::Grid trend;
  raster::Grid residual;   ///< simulated residual field (before the floor clamp)
  raster::Grid truth_agb;  ///< max(trend + residual, agb_floor)
  std::vector<waveform::WaveformRecord> waveforms;
  std::vector<FootprintTruth> footprint_truth;
  std::vector<allometry::PlotRecord> plots;
};

inline constexpr const char* kCategoricalCovariate = "geol";

namespace detail {

enum Stream : std::uint64_t { kCovariates = 1, kDem, kResidual, kFootprintXY, kFootprint, kPlots };

inline int geol_class(double v, std::size_t n_classes) {
  // equal-probability classes of a standard normal field
  static constexpr double kQuartiles[] = {-0.6744897501960817, 0.0, 0.6744897501960817};
  if (n_classes == 4) {
    int c = 0;
    for (double q : kQuartiles) c += v > q ? 1 : 0;
    return c;
  }
  const double u = 0.5 * std::erfc(-v / std::sqrt(2.0));
  return std::min(static_cast<int>(n_classes) - 1, static_cast<int>(u * static_cast<double>(n_classes)));
}

inline double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

}  // namespace detail

/// Synthesizes one footprint's waveform from its planted structure. The
/// profile holds a ground return, a weaker mid-canopy return near half height
/// and the canopy-top return, over a constant background.
inline waveform::WaveformRecord synthesize_waveform(const SceneConfig& cfg, const std::string& id, Point2 at,
                                                    double ground, double height, Rng& rng) {
  waveform::WaveformRecord w;
  w.id = id;
  w.lon = at.x;
  w.lat = at.y;
  w.bin_size = cfg.bin_size;
  const double pad = 15.0;
  const double top = ground + height + 3.0 * cfg.canopy_sigma + pad;
  const double bottom = ground - 3.0 * cfg.ground_sigma - pad;
  w.bin_top_elev = std::ceil(top / cfg.bin_size) * cfg.bin_size;
  const auto n = static_cast<std::size_t>(std::ceil((w.bin_top_elev - bottom) / cfg.bin_size)) + 1;
  const waveform::GaussianComponent g{cfg.ground_amplitude, ground, cfg.ground_sigma};
  const double j = cfg.structure_jitter;
  const double mid_at = 0.5 + j * uniform(rng, -0.5, 0.5);
  const double mid_amp = cfg.mid_amplitude * (1.0 + j * uniform(rng, -1.0, 1.0));
  const double can_amp = cfg.canopy_amplitude * (1.0 + j * uniform(rng, -1.0, 1.0));
  const waveform::GaussianComponent mid{mid_amp, ground + mid_at * height, cfg.canopy_sigma};
  const waveform::GaussianComponent can{can_amp, ground + height, cfg.canopy_sigma};
  const double peak = std::max({cfg.ground_amplitude, can_amp, mid_amp});
  const double sd = cfg.waveform_noise * peak;
  w.intensities.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = w.elevation(i);
    double v = cfg.background + g(e) + mid(e) + can(e);
    if (sd > 0) v += sd * normal(rng);
    w.intensities[i] = detail::round3(std::max(0.0, v));
  }
  w.srtm_elev = detail::round3(ground + 0.5 * height + normal(rng, 0.0, 2.0));
  return w;
}

inline Scene generate_scene(const SceneConfig& cfg) {
  cfg.validate();
  Scene s;
  s.config = cfg;
  const auto geom = cfg.geometry();

  {
    auto rng = make_rng(cfg.seed, detail::kCovariates);
    const auto cov = gaussian_covariance(1.0, cfg.covariate_range);
    for (std::size_t i = 0; i < cfg.coefficients.size(); ++i)
      s.covariates.add("c" + std::to_string(i + 1), simulate_grid_field(geom, cov, 0.0, rng));
    auto g = simulate_grid_field(geom, cov, 0.0, rng);
    for (auto& v : g.values()) v = detail::geol_class(v, cfg.class_effects.size());
    s.covariates.add(kCategoricalCovariate, std::move(g));
  }
  {
    auto rng = make_rng(cfg.seed, detail::kDem);
    s.dem = simulate_grid_field(geom, gaussian_covariance(1.0, cfg.covariate_range * 0.5), 0.0, rng);
    for (auto& v : s.dem.values()) v = detail::round3(150.0 + 60.0 * v);
  }
  {
    auto rng = make_rng(cfg.seed, detail::kResidual);
    s.residual = simulate_grid_field(geom, cfg.residual, rng);
  }
  s.trend = raster::Grid(geom, raster::Grid::kDefaultNodata, cfg.intercept);
  const auto& geol = s.covariates.band(kCategoricalCovariate);
  for (std::size_t k = 0; k < geom.cell_count(); ++k) {
    double t = cfg.intercept + cfg.class_effects[static_cast<std::size_t>(geol.values()[k])];
    for (std::size_t i = 0; i < cfg.coefficients.size(); ++i) t += cfg.coefficients[i] * s.covariates.band(i).values()[k];
    s.trend.values()[k] = t;
  }
  s.truth_agb = raster::Grid(geom, raster::Grid::kDefaultNodata, 0.0);
  for (std::size_t k = 0; k < geom.cell_count(); ++k)
    s.truth_agb.values()[k] = std::max(cfg.agb_floor, s.trend.values()[k] + s.residual.values()[k]);

  // footprint locations come from one stream, per-footprint content from
  // derived seeds so generation parallelizes without changing the output
  std::vector<Point2> xy(static_cast<std::size_t>(cfg.n_footprints));
  {
    auto rng = make_rng(cfg.seed, detail::kFootprintXY);
    for (auto& p : xy) p = {cfg.origin_x + uniform01(rng) * geom.width(), cfg.origin_y + uniform01(rng) * geom.height()};
  }
  s.waveforms.resize(xy.size());
  s.footprint_truth.resize(xy.size());
  parallel_for(xy.size(), [&](std::size_t i) {
    auto rng = make_rng(cfg.seed, detail::kFootprint, i);
    const auto rc = geom.cell_of(xy[i]).value();
    FootprintTruth& t = s.footprint_truth[i];
    t.agb = s.truth_agb.at(rc.first, rc.second);
    t.ground_elev = s.dem.at(rc.first, rc.second) + normal(rng, 0.0, 0.5);
    t.canopy_height = std::max(2.0, cfg.height_intercept + cfg.height_slope * t.agb + normal(rng, 0.0, cfg.height_noise_sd));
    char id[32];
    std::snprintf(id, sizeof id, "fp%06zu", i + 1);
    auto w = synthesize_waveform(cfg, id, xy[i], t.ground_elev, t.canopy_height, rng);
    if (uniform01(rng) < cfg.violation_rate) {
      switch (uniform_index(rng, 4)) {
        case 0: {
          // noise SD of 1/8 of the peak: still detectable, SNR near 8; the
          // background is lifted so the counts never clip at zero
          const double sd = std::max({cfg.ground_amplitude, cfg.canopy_amplitude, cfg.mid_amplitude}) / 8.0;
          for (auto& v : w.intensities) v = detail::round3(std::max(0.0, v + 4.0 * sd + normal(rng, 0.0, sd)));
          t.planted = waveform::RejectReason::SNR;
          break;
        }
        case 1:
          w.cloud_flag = static_cast<int>(uniform_index(rng, 15));
          t.planted = waveform::RejectReason::Cloud;
          break;
        case 2:
          w.sat_ndx = 1 + static_cast<int>(uniform_index(rng, 3));
          t.planted = waveform::RejectReason::Saturated;
          break;
        default:
          w.srtm_elev = detail::round3(w.srtm_elev + (uniform01(rng) < 0.5 ? -1.0 : 1.0) * uniform(rng, 150.0, 400.0));
          t.planted = waveform::RejectReason::ElevationMismatch;
          break;
      }
    }
    s.waveforms[i] = std::move(w);
  });

  {
    auto rng = make_rng(cfg.seed, detail::kPlots);
    const double rad = cfg.cluster_radius;
    std::vector<Point2> centers(static_cast<std::size_t>(cfg.plot_clusters));
    for (auto& c : centers)
      c = {cfg.origin_x + rad + uniform01(rng) * (geom.width() - 2 * rad),
           cfg.origin_y + rad + uniform01(rng) * (geom.height() - 2 * rad)};
    s.plots.resize(static_cast<std::size_t>(cfg.n_plots));
    for (std::size_t i = 0; i < s.plots.size(); ++i) {
      auto& p = s.plots[i];
      char id[32];
      std::snprintf(id, sizeof id, "P%04zu", i + 1);
      p.id = id;
      // uniform in a disk around the cluster center
      const auto& c = centers[i % centers.size()];
      const double r = rad * std::sqrt(uniform01(rng));
      const double t = 2.0 * std::numbers::pi * uniform01(rng);
      p.lon = c.x + r * std::cos(t);
      p.lat = c.y + r * std::sin(t);
      const double truth = s.truth_agb.sample({p.lon, p.lat}).value();
      p.agb_mg_ha = detail::round3(std::max(0.0, truth + normal(rng, 0.0, cfg.plot_noise_sd)));
    }
  }
  return s;
}

inline text::CsvTable footprint_truth_table(const Scene& s) {
  text::CsvTable t({"id", "lon", "lat", "agb", "canopy_height", "ground_elev", "planted_reject"});
  for (std::size_t i = 0; i < s.waveforms.size(); ++i) {
    const auto& w = s.waveforms[i];
    const auto& f = s.footprint_truth[i];
    t.add_row({w.id, text::format_exact(w.lon), text::format_exact(w.lat), text::format_exact(f.agb),
               text::format_exact(f.canopy_height), text::format_exact(f.ground_elev),
               std::string(waveform::to_string(f.planted))});
  }
  return t;
}

/// Writes the scene in the pipeline's input formats: waveforms.ndjson,
/// plots.csv, one ASCII grid per covariate, dem.asc, plus truth_agb.asc,
/// footprint_truth.csv and scene.json for scoring.
inline void write_scene(const Scene& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  waveform::write_waveforms((dir / "waveforms.ndjson").string(), s.waveforms);
  allometry::plot_table(s.plots).write((dir / "plots.csv").string());
  for (std::size_t i = 0; i < s.covariates.size(); ++i)
    raster::write_ascii_grid((dir / (s.covariates.name(i) + ".asc")).string(), s.covariates.band(i));
  raster::write_ascii_grid((dir / "dem.asc").string(), s.dem);
  raster::write_ascii_grid((dir / "truth_agb.asc").string(), s.truth_agb);
  footprint_truth_table(s).write((dir / "footprint_truth.csv").string());
  std::ofstream out(dir / "scene.json");
  if (!out) fail(Errc::IoError, "cannot write " + (dir / "scene.json").string());
  out << to_json(s.config).dump(2) << '\n';
}

}  // namespace agb::synthdata
