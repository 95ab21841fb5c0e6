// agbmap: command-line front end for the biomass mapping chain.
//
// Exit codes: 0 success, 1 domain or I/O error, 2 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "agbmap/agbmap.hpp"

namespace fs = std::filesystem;
using namespace agb;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

void write_table(const text::CsvTable& t, const std::string& out) {
  if (out.empty() || out == "-")
    t.write(std::cout);
  else
    t.write(out);
}

std::vector<waveform::FootprintMetrics> read_metrics(const std::string& path) {
  return waveform::metrics_from_table(text::CsvTable::read(path));
}

// simulate ------------------------------------------------------------------

struct SimulateArgs {
  std::string out = "scene";
  std::string config;
  std::optional<int> n_footprints, n_plots;
  std::optional<double> noise;
};

int run_simulate(const SimulateArgs& a, const Common& c) {
  synthdata::SceneConfig cfg;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) fail(Errc::IoError, "cannot read " + a.config);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      fail(Errc::ConfigError, a.config + ": " + e.what());
    }
    cfg = synthdata::scene_config_from_json(j);
  }
  if (c.seed) cfg.seed = *c.seed;
  if (a.n_footprints) cfg.n_footprints = *a.n_footprints;
  if (a.n_plots) cfg.n_plots = *a.n_plots;
  if (a.noise) cfg.waveform_noise = *a.noise;
  const auto scene = synthdata::generate_scene(cfg);
  const fs::path dir(a.out);
  synthdata::write_scene(scene, dir);

  pipeline::RunConfig run;
  run.waveforms = "waveforms.ndjson";
  run.dem = "dem.asc";
  run.plots = "plots.csv";
  for (const auto& n : scene.covariates.names()) run.covariates.push_back({n, n + ".asc"});
  run.categorical = {synthdata::kCategoricalCovariate};
  run.out_dir = "run";
  run.seed = cfg.seed;
  if (cfg.waveform_noise == 0) run.process.signal.sd_floor = 1e-3 * cfg.ground_amplitude;
  pipeline::save_run_config(dir / "run.cfg", run);
  std::cerr << "scene written to " << dir.string() << " (" << scene.waveforms.size() << " footprints, "
            << scene.plots.size() << " plots)\n";
  return 0;
}

// filter / metrics ------------------------------------------------------------

struct WaveformArgs {
  std::string in, dem, out;
  waveform::ProcessOptions opt;
};

int run_filter(const WaveformArgs& a) {
  const auto records = waveform::read_waveforms(a.in);
  const auto dem = raster::read_ascii_grid(a.dem);
  const auto outcomes = waveform::process_batch(records, dem, a.opt);
  text::CsvTable t({"id", "reject_reason"});
  std::size_t kept = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto r = outcomes[i].reason;
    kept += r == waveform::RejectReason::None;
    t.add_row({records[i].id, r == waveform::RejectReason::None ? "kept" : std::string(waveform::to_string(r))});
  }
  write_table(t, a.out);
  std::cerr << kept << " of " << records.size() << " footprints kept\n";
  return 0;
}

int run_metrics(const WaveformArgs& a) {
  const auto records = waveform::read_waveforms(a.in);
  const auto dem = raster::read_ascii_grid(a.dem);
  const auto kept = waveform::kept_metrics(records, waveform::process_batch(records, dem, a.opt));
  write_table(waveform::metrics_table(kept), a.out);
  std::cerr << kept.size() << " of " << records.size() << " footprints kept\n";
  return 0;
}

// sweep / calibrate -----------------------------------------------------------

struct SweepArgs {
  std::string plots, metrics, out;
  std::vector<double> distances{100.0, 200.0, 250.0, 300.0, 350.0, 400.0};
  int folds = 10;
};

int run_sweep(const SweepArgs& a, const Common& c) {
  const auto plots = allometry::plots_from_table(text::CsvTable::read(a.plots));
  const auto rows = pipeline::calibration_sweep(plots, read_metrics(a.metrics), a.distances, a.folds, c.seed.value_or(0));
  write_table(pipeline::sweep_table(rows), a.out);
  return 0;
}

struct CalibrateArgs {
  std::string plots, metrics, out, predict;
  double max_dist = 250.0;
};

int run_calibrate(const CalibrateArgs& a) {
  const auto plots = allometry::plots_from_table(text::CsvTable::read(a.plots));
  const auto fp = read_metrics(a.metrics);
  const auto pairs = pipeline::pair_plots(plots, fp, a.max_dist);
  if (pairs.empty())
    fail(Errc::NoPairs, "no plot has a footprint within " + text::format_exact(a.max_dist) + " m");
  const auto model = pipeline::fit_glas_agb_model(pipeline::pair_design(plots, fp, pairs));
  if (a.out.empty() || a.out == "-")
    regression::save_model(std::cout, regression::Model(model));
  else
    regression::save_model(fs::path(a.out), regression::Model(model));
  std::cerr << pairs.size() << " pairs; selected";
  for (const auto& f : model.selected_features) std::cerr << ' ' << f;
  std::cerr << '\n';
  if (!a.predict.empty()) {
    const auto pred = pipeline::predict_footprints(model, fp);
    pipeline::footprint_agb_table(pred).write(a.predict);
    if (pred.n_clamped) std::cerr << pred.n_clamped << " negative predictions set to 0\n";
  }
  return 0;
}

// map -------------------------------------------------------------------------

struct MapArgs {
  std::string config, out, trend;
  std::vector<double> grid_sizes;
  bool quicklook = false;
};

int run_map(const MapArgs& a, const Common& c) {
  auto cfg = pipeline::load_run_config(a.config);
  pipeline::resolve_paths(cfg, fs::path(a.config).parent_path());
  if (c.seed) cfg.seed = *c.seed;
  if (!a.grid_sizes.empty()) cfg.grid_sizes = a.grid_sizes;
  if (!a.trend.empty()) cfg.trend = a.trend;
  if (!a.out.empty()) cfg.out_dir = a.out;
  const auto res = pipeline::run_pipeline(cfg, &std::cerr);
  if (a.quicklook)
    for (const auto& g : res.grids)
      raster::write_quicklook_png((fs::path(cfg.out_dir) / ("agb_" + pipeline::size_tag(g.grid_size) + ".png")).string(),
                                  g.map.agb);
  return 0;
}

// validate / carbon -------------------------------------------------------------

struct ValidateArgs {
  std::string map, plots, out;
  int min_count = 4;
};

int run_validate(const ValidateArgs& a) {
  const auto map = raster::read_ascii_grid(a.map);
  const auto plots = allometry::plots_from_table(text::CsvTable::read(a.plots));
  const auto v = pipeline::validate_map(map, plots, a.min_count);
  write_table(pipeline::validation_table(v, map.geometry()), a.out);
  std::cerr << "RMSEP " << text::format_sig(v.rmsep, 6) << " Mg/ha, R2 " << text::format_sig(v.r2, 4) << ", "
            << v.n_cells << " cells\n";
  return 0;
}

struct CarbonArgs {
  std::string map, out, convention = "dimensional";
};

int run_carbon(const CarbonArgs& a) {
  const auto map = raster::read_ascii_grid(a.map);
  const auto conv =
      a.convention == "literal" ? allometry::CarbonConvention::Literal : allometry::CarbonConvention::Dimensional;
  write_table(allometry::carbon_table(allometry::carbon_stock(map, conv)), a.out);
  return 0;
}

// variogram / textures --------------------------------------------------------

struct VariogramArgs {
  std::string samples, out, x_col = "x", y_col = "y", value_col = "value";
  std::optional<double> bin_width, max_lag;
  int lags = 30;
  bool no_fit = false;
};

int run_variogram(const VariogramArgs& a) {
  const auto t = text::CsvTable::read(a.samples);
  geostat::SampleSet s;
  for (std::size_t i = 0; i < t.size(); ++i) s.add({t.number(i, a.x_col), t.number(i, a.y_col)}, t.number(i, a.value_col));
  auto [w, m] = geostat::default_lags(s, a.lags);
  if (a.max_lag) {
    m = *a.max_lag;
    w = m / a.lags;
  }
  if (a.bin_width) w = *a.bin_width;
  const auto ev = geostat::empirical_variogram(s, w, m);
  std::optional<geostat::VariogramModel> model;
  if (!a.no_fit) model = geostat::fit_exponential(ev);
  if (a.out.empty() || a.out == "-")
    geostat::write_variogram_csv(std::cout, ev, model ? &*model : nullptr);
  else
    geostat::write_variogram_csv(fs::path(a.out), ev, model ? &*model : nullptr);
  if (model)
    std::cerr << "nugget " << text::format_sig(model->nugget, 6) << ", psill " << text::format_sig(model->psill, 6)
              << ", range " << text::format_sig(model->range, 6) << " m\n";
  return 0;
}

struct TexturesArgs {
  std::string in, out_dir = ".", prefix;
  int window = 3, levels = 32;
};

int run_textures(const TexturesArgs& a) {
  const auto g = raster::read_ascii_grid(a.in);
  const auto stack = raster::glcm_textures(g, a.window, a.levels);
  fs::create_directories(a.out_dir);
  const std::string prefix = a.prefix.empty() ? fs::path(a.in).stem().string() : a.prefix;
  for (std::size_t i = 0; i < stack.size(); ++i)
    raster::write_ascii_grid((fs::path(a.out_dir) / (prefix + "_" + stack.name(i) + ".asc")).string(), stack.band(i));
  return 0;
}

void add_process_options(CLI::App* cmd, WaveformArgs& a) {
  cmd->add_option("--in", a.in, "waveform records (NDJSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--dem", a.dem, "DEM (ESRI ASCII grid)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out, "output CSV (default stdout)");
  cmd->add_option("--min-snr", a.opt.filter.min_snr, "minimum signal-to-noise ratio")->capture_default_str();
  cmd->add_option("--cloud-ok", a.opt.filter.cloud_ok, "cloud flag value of a clear shot")->capture_default_str();
  cmd->add_option("--max-elev-gap", a.opt.filter.max_elev_gap, "maximum |SRTM - centroid| in m")->capture_default_str();
  cmd->add_option("--threshold-k", a.opt.signal.k, "signal threshold in noise SDs")->capture_default_str();
  cmd->add_option("--sd-floor", a.opt.signal.sd_floor, "noise SD used when the noise is exactly flat")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aboveground biomass mapping from LiDAR footprints, field plots and covariate rasters"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "master random seed");
  app.add_option("--threads", common.threads, "worker thread cap (0 = all cores)");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic scene and its run.cfg");
  simulate->add_option("--out", sim.out, "output directory")->capture_default_str();
  simulate->add_option("--config", sim.config, "scene configuration (JSON)")->check(CLI::ExistingFile);
  simulate->add_option("--n-footprints", sim.n_footprints, "number of footprints");
  simulate->add_option("--n-plots", sim.n_plots, "number of field plots");
  simulate->add_option("--noise", sim.noise, "waveform noise SD as a fraction of the peak");

  WaveformArgs filt, met;
  auto* filter = app.add_subcommand("filter", "quality-screen waveforms; one row per footprint");
  add_process_options(filter, filt);
  auto* metrics = app.add_subcommand("metrics", "waveform metrics of the footprints that pass screening");
  add_process_options(metrics, met);

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "cross-validated calibration at several plot-footprint distances");
  sweep->add_option("--plots", sw.plots, "plot CSV")->required()->check(CLI::ExistingFile);
  sweep->add_option("--metrics", sw.metrics, "metrics CSV")->required()->check(CLI::ExistingFile);
  sweep->add_option("--distance", sw.distances, "maximum pairing distance in m (repeatable)")->capture_default_str();
  sweep->add_option("--folds", sw.folds, "cross-validation folds")->capture_default_str();
  sweep->add_option("--out", sw.out, "output CSV (default stdout)");

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "fit the footprint AGB model from plot-footprint pairs");
  calibrate->add_option("--plots", cal.plots, "plot CSV")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--metrics", cal.metrics, "metrics CSV")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--max-dist", cal.max_dist, "maximum pairing distance in m")->capture_default_str();
  calibrate->add_option("--out", cal.out, "model file (default stdout)");
  calibrate->add_option("--predict", cal.predict, "also write AGB for every footprint to this CSV");

  MapArgs mp;
  auto* map = app.add_subcommand("map", "run the full mapping chain from a run configuration");
  map->add_option("--config", mp.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  map->add_option("--grid-size", mp.grid_sizes, "map cell size in m (repeatable; default 500 1000 2000)");
  map->add_option("--trend", mp.trend, "trend model")->check(CLI::IsMember({"lm", "rf"}));
  map->add_option("--out", mp.out, "run directory (overrides the config)");
  map->add_flag("--quicklook", mp.quicklook, "also write a PNG quicklook per map");

  ValidateArgs val;
  auto* validate = app.add_subcommand("validate", "compare a map with plot means per cell");
  validate->add_option("--map", val.map, "AGB map (ESRI ASCII grid)")->required()->check(CLI::ExistingFile);
  validate->add_option("--plots", val.plots, "plot CSV")->required()->check(CLI::ExistingFile);
  validate->add_option("--min-count", val.min_count, "plots needed per cell")->capture_default_str()->check(
      CLI::PositiveNumber);
  validate->add_option("--out", val.out, "output CSV (default stdout)");

  CarbonArgs car;
  auto* carbon = app.add_subcommand("carbon", "carbon stock of an AGB map");
  carbon->add_option("--map", car.map, "AGB map in Mg/ha (ESRI ASCII grid)")->required()->check(CLI::ExistingFile);
  carbon->add_option("--convention", car.convention, "per-cell area convention")
      ->capture_default_str()
      ->check(CLI::IsMember({"dimensional", "literal"}));
  carbon->add_option("--out", car.out, "output CSV (default stdout)");

  VariogramArgs vg;
  auto* variogram = app.add_subcommand("variogram", "empirical variogram and exponential fit of point samples");
  variogram->add_option("--samples", vg.samples, "CSV with coordinates and values")->required()->check(
      CLI::ExistingFile);
  variogram->add_option("--x", vg.x_col, "x column")->capture_default_str();
  variogram->add_option("--y", vg.y_col, "y column")->capture_default_str();
  variogram->add_option("--value", vg.value_col, "value column")->capture_default_str();
  variogram->add_option("--lags", vg.lags, "number of lag bins")->capture_default_str()->check(CLI::PositiveNumber);
  variogram->add_option("--bin-width", vg.bin_width, "lag bin width in m");
  variogram->add_option("--max-lag", vg.max_lag, "largest lag in m");
  variogram->add_flag("--no-fit", vg.no_fit, "skip the exponential fit");
  variogram->add_option("--out", vg.out, "output CSV (default stdout)");

  TexturesArgs tx;
  auto* textures = app.add_subcommand("textures", "GLCM texture bands of a raster");
  textures->add_option("--in", tx.in, "input raster (ESRI ASCII grid)")->required()->check(CLI::ExistingFile);
  textures->add_option("--out-dir", tx.out_dir, "output directory")->capture_default_str();
  textures->add_option("--prefix", tx.prefix, "output file prefix (default input stem)");
  textures->add_option("--window", tx.window, "odd window size")->capture_default_str();
  textures->add_option("--levels", tx.levels, "gray levels")->capture_default_str();

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (seed_opt->count()) common.seed = seed_value;
  set_thread_limit(common.threads);

  try {
    if (*simulate) return run_simulate(sim, common);
    if (*filter) return run_filter(filt);
    if (*metrics) return run_metrics(met);
    if (*sweep) return run_sweep(sw, common);
    if (*calibrate) return run_calibrate(cal);
    if (*map) return run_map(mp, common);
    if (*validate) return run_validate(val);
    if (*carbon) return run_carbon(car);
    if (*variogram) return run_variogram(vg);
    if (*textures) return run_textures(tx);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
