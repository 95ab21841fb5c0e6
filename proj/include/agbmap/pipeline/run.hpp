#pragma once

// End-to-end run: waveform screening and metrics, plot split, footprint
// calibration, then one regression-kriged map per grid size, each validated
// and summed to a carbon stock. Every output file is listed with its
// fingerprint in run_manifest.json.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agbmap/allometry.hpp"
#include "agbmap/pipeline/calibration.hpp"
#include "agbmap/pipeline/config.hpp"
#include "agbmap/pipeline/mapping.hpp"
#include "agbmap/raster/ascii_grid.hpp"
#include "agbmap/waveform/io.hpp"
#include "agbmap/waveform/process.hpp"

namespace agb::pipeline {

struct GridRun {
  double grid_size = 0.0;
  MapProduct map;
  std::optional<ValidationResult> validation;  ///< empty when no cell qualified
  allometry::CarbonReport carbon;
};

struct RunResult {
  std::size_t n_waveforms = 0;
  std::size_t n_kept = 0;
  std::map<std::string, std::size_t> rejects;
  std::size_t n_calibration_plots = 0;
  std::size_t n_validation_plots = 0;
  std::vector<CalibrationSweepRow> sweep;
  std::size_t n_pairs = 0;
  regression::LinearModel glas_model;
  std::size_t n_agb_glas = 0;
  std::size_t n_glas_clamped = 0;
  std::vector<GridRun> grids;
  nlohmann::json manifest;
};

inline std::string size_tag(double grid_size) { return text::format_exact(grid_size); }

inline std::string file_fingerprint(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot read " + p.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text::hex64(text::fnv1a(data));
}

inline raster::GridStack load_covariates(const RunConfig& c) {
  raster::GridStack s;
  for (const auto& cv : c.covariates) s.add(cv.name, raster::read_ascii_grid(cv.path));
  return s;
}

/// Sweep rows for each distance; a distance with no pair yields a row with
/// n_pairs 0 rather than stopping the run.
inline std::vector<CalibrationSweepRow> run_sweep(const std::vector<allometry::PlotRecord>& plots,
                                                  const std::vector<waveform::FootprintMetrics>& fp,
                                                  const RunConfig& c) {
  std::vector<CalibrationSweepRow> rows;
  for (double d : c.sweep_distances) {
    try {
      rows.push_back(calibration_sweep(plots, fp, {d}, c.cv_folds, derive_seed(c.seed, 0xC1)).front());
    } catch (const Error& e) {
      if (e.code() != Errc::NoPairs) throw;
      CalibrationSweepRow r;
      r.max_dist = d;
      rows.push_back(r);
    }
  }
  return rows;
}

inline RunResult run_pipeline(const RunConfig& c, std::ostream* log = nullptr) {
  c.validate();
  namespace fs = std::filesystem;
  const fs::path out_dir(c.out_dir);
  fs::create_directories(out_dir);
  std::vector<std::string> files;
  auto note = [&](const std::string& s) {
    if (log) *log << s << '\n';
  };
  auto out_path = [&](const std::string& name) {
    files.push_back(name);
    return (out_dir / name).string();
  };

  RunResult res;
  const auto records = waveform::read_waveforms(c.waveforms);
  const auto dem = raster::read_ascii_grid(c.dem);
  const auto plots = allometry::plots_from_table(text::CsvTable::read(c.plots));
  const auto covariates = load_covariates(c);
  res.n_waveforms = records.size();

  // footprint screening and metrics
  const auto outcomes = waveform::process_batch(records, dem, c.process);
  const auto kept = waveform::kept_metrics(records, outcomes);
  res.n_kept = kept.size();
  {
    text::CsvTable t({"id", "reject_reason"});
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto r = outcomes[i].reason;
      t.add_row({records[i].id, r == waveform::RejectReason::None ? "kept" : std::string(waveform::to_string(r))});
      if (r != waveform::RejectReason::None) ++res.rejects[std::string(waveform::to_string(r))];
    }
    t.write(out_path("filter_report.csv"));
    waveform::metrics_table(kept).write(out_path("metrics.csv"));
  }
  note("footprints: " + std::to_string(res.n_kept) + " of " + std::to_string(res.n_waveforms) + " kept");

  // calibration on half the plots
  const auto split = split_plots(plots, c.seed);
  res.n_calibration_plots = split.calibration.size();
  res.n_validation_plots = split.validation.size();
  res.sweep = run_sweep(split.calibration, kept, c);
  sweep_table(res.sweep).write(out_path("sweep.csv"));

  const auto pairs = pair_plots(split.calibration, kept, c.max_match_distance);
  res.n_pairs = pairs.size();
  if (pairs.empty())
    fail(Errc::NoPairs, "no calibration plot has a footprint within " + text::format_exact(c.max_match_distance) + " m");
  res.glas_model = fit_glas_agb_model(pair_design(split.calibration, kept, pairs));
  regression::save_model(out_path("glas_model.txt"), regression::Model(res.glas_model));
  note("calibration: " + std::to_string(res.n_pairs) + " pairs, " +
       std::to_string(res.glas_model.selected_features.size()) + " metrics selected");

  // AGB at the footprints not used for calibration
  std::set<std::size_t> matched;
  for (const auto& p : pairs) matched.insert(p.footprint);
  std::vector<waveform::FootprintMetrics> remaining;
  for (std::size_t i = 0; i < kept.size(); ++i)
    if (!matched.count(i)) remaining.push_back(kept[i]);
  const auto glas = predict_footprints(res.glas_model, remaining);
  res.n_agb_glas = glas.samples.size();
  res.n_glas_clamped = glas.n_clamped;
  footprint_agb_table(glas).write(out_path("footprint_agb.csv"));

  const auto opt = c.map_options();
  const auto convention = c.carbon_convention == "literal" ? allometry::CarbonConvention::Literal
                                                           : allometry::CarbonConvention::Dimensional;
  for (double gs : c.grid_sizes) {
    const auto tag = size_tag(gs);
    GridRun gr;
    gr.grid_size = gs;
    gr.map = build_map(glas.samples, resample_covariates(covariates, gs, c.categorical), gs, opt);
    if (!gr.map.warning.empty()) note("warning (" + tag + " m): " + gr.map.warning);
    raster::write_ascii_grid(out_path("agb_" + tag + ".asc"), gr.map.agb);
    raster::write_ascii_grid(out_path("krigevar_" + tag + ".asc"), gr.map.krige_var);
    geostat::write_variogram_csv(out_path("variogram_" + tag + ".csv"), gr.map.empirical,
                                 gr.map.variogram_failed ? nullptr : &gr.map.variogram);
    try {
      gr.validation = validate_map(gr.map.agb, split.validation, c.min_plots_per_cell);
      validation_table(*gr.validation, gr.map.agb.geometry()).write(out_path("validation_" + tag + ".csv"));
    } catch (const Error& e) {
      if (e.code() != Errc::NoQualifyingCells) throw;
      note("validation (" + tag + " m): " + e.what());
      validation_table(ValidationResult{}, gr.map.agb.geometry()).write(out_path("validation_" + tag + ".csv"));
    }
    gr.carbon = allometry::carbon_stock(gr.map.agb, convention);
    allometry::carbon_table(gr.carbon).write(out_path("carbon_" + tag + ".csv"));
    if (gr.validation)
      note("map " + tag + " m: RMSEP " + text::format_sig(gr.validation->rmsep, 4) + " Mg/ha, R2 " +
           text::format_sig(gr.validation->r2, 3) + " over " + std::to_string(gr.validation->n_cells) + " cells");
    res.grids.push_back(std::move(gr));
  }

  // manifest: effective configuration, summary numbers, output fingerprints
  nlohmann::json m;
  m["config"] = to_json(c);
  m["config_hash"] = config_hash(c);
  m["footprints"] = {{"total", res.n_waveforms}, {"kept", res.n_kept}, {"rejected", res.rejects}};
  m["plots"] = {{"calibration", res.n_calibration_plots}, {"validation", res.n_validation_plots}};
  nlohmann::json sel = nlohmann::json::array();
  for (std::size_t k = 0; k < res.glas_model.selected_features.size(); ++k)
    sel.push_back({{"metric", res.glas_model.selected_features[k]}, {"coefficient", res.glas_model.coefficients[k]}});
  m["calibration"] = {{"pairs", res.n_pairs},
                      {"intercept", res.glas_model.intercept},
                      {"selected", sel},
                      {"agb_glas_samples", res.n_agb_glas},
                      {"agb_glas_clamped", res.n_glas_clamped}};
  m["maps"] = nlohmann::json::array();
  for (const auto& gr : res.grids) {
    nlohmann::json g;
    g["grid_size"] = gr.grid_size;
    g["trend"] = to_string(opt.trend);
    g["covariates"] = gr.map.covariates;
    g["samples"] = gr.map.n_samples;
    g["variogram_failed"] = gr.map.variogram_failed;
    if (!gr.map.variogram_failed)
      g["variogram"] = {{"nugget", gr.map.variogram.nugget},
                        {"psill", gr.map.variogram.psill},
                        {"range", gr.map.variogram.range}};
    g["clamped_cells"] = gr.map.n_clamped;
    if (gr.validation)
      g["validation"] = {{"rmsep", gr.validation->rmsep}, {"r2", gr.validation->r2}, {"n_cells", gr.validation->n_cells}};
    else
      g["validation"] = {{"n_cells", 0}};
    g["carbon_tC"] = gr.carbon.total_tc;
    m["maps"].push_back(std::move(g));
  }
  nlohmann::json fl = nlohmann::json::object();
  for (const auto& f : files) fl[f] = file_fingerprint(out_dir / f);
  m["outputs"] = fl;
  {
    std::ofstream out(out_dir / "run_manifest.json", std::ios::binary);
    if (!out) fail(Errc::IoError, "cannot write run_manifest.json");
    out << m.dump(2) << '\n';
  }
  res.manifest = std::move(m);
  return res;
}

}  // namespace agb::pipeline
