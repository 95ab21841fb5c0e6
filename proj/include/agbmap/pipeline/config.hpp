#pragma once

// Run configuration: a JSON document naming the inputs and every tunable of
// the mapping chain. Relative paths resolve against the config file's
// directory.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agbmap/error.hpp"
#include "agbmap/pipeline/mapping.hpp"
#include "agbmap/text.hpp"
#include "agbmap/waveform/process.hpp"

namespace agb::pipeline {

struct CovariateInput {
  std::string name;
  std::string path;
};

struct RunConfig {
  std::string waveforms;
  std::string dem;
  std::string plots;
  std::vector<CovariateInput> covariates;
  std::vector<std::string> categorical{"geol"};
  std::string out_dir = "run";

  std::vector<double> grid_sizes{500.0, 1000.0, 2000.0};
  std::string trend = "rf";
  double max_match_distance = 250.0;
  std::vector<double> sweep_distances{100.0, 200.0, 250.0, 300.0, 350.0, 400.0};
  int cv_folds = 10;
  int min_plots_per_cell = 4;

  std::size_t neighborhood = geostat::kDefaultNeighborhood;
  int n_lags = 30;
  regression::ForestParams forest{};
  int top_k = 0;
  int importance_repetitions = 50;

  waveform::ProcessOptions process{};
  std::string carbon_convention = "dimensional";
  std::uint64_t seed = 0;

  void validate() const {
    auto ok = [](bool c, const std::string& what) {
      if (!c) fail(Errc::ConfigError, "run config: " + what);
    };
    ok(!waveforms.empty() && !dem.empty() && !plots.empty(), "waveforms, dem and plots are required");
    ok(!covariates.empty(), "at least one covariate is required");
    std::set<std::string> names;
    for (const auto& c : covariates) {
      ok(!c.name.empty() && !c.path.empty(), "covariates need a name and a path");
      ok(names.insert(c.name).second, "duplicate covariate '" + c.name + "'");
    }
    ok(!grid_sizes.empty(), "grid_sizes must not be empty");
    for (double g : grid_sizes) ok(g > 0 && std::isfinite(g), "grid sizes must be > 0");
    ok(trend == "lm" || trend == "rf", "trend must be 'lm' or 'rf'");
    ok(max_match_distance > 0, "max_match_distance must be > 0");
    for (double d : sweep_distances) ok(d > 0 && std::isfinite(d), "sweep distances must be > 0");
    ok(cv_folds >= 2, "cv_folds must be >= 2");
    ok(min_plots_per_cell >= 1, "min_plots_per_cell must be >= 1");
    ok(neighborhood >= 1, "neighborhood must be >= 1");
    ok(n_lags >= 4, "n_lags must be >= 4");
    ok(forest.n_trees >= 1 && forest.mtry >= 0 && forest.min_leaf >= 1, "forest parameters out of range");
    ok(top_k >= 0 && importance_repetitions >= 1, "top_k must be >= 0 and importance_repetitions >= 1");
    ok(carbon_convention == "dimensional" || carbon_convention == "literal",
       "carbon_convention must be 'dimensional' or 'literal'");
  }

  MapOptions map_options() const {
    MapOptions o;
    o.trend = parse_trend(trend);
    o.forest = forest;
    o.categorical = categorical;
    o.top_k = top_k;
    o.importance_repetitions = importance_repetitions;
    o.neighborhood = neighborhood;
    o.n_lags = n_lags;
    o.seed = seed;
    return o;
  }
};

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["waveforms"] = c.waveforms;
  j["dem"] = c.dem;
  j["plots"] = c.plots;
  j["covariates"] = nlohmann::json::array();
  for (const auto& cv : c.covariates) j["covariates"].push_back({{"name", cv.name}, {"path", cv.path}});
  j["categorical"] = c.categorical;
  j["out_dir"] = c.out_dir;
  j["grid_sizes"] = c.grid_sizes;
  j["trend"] = c.trend;
  j["max_match_distance"] = c.max_match_distance;
  j["sweep_distances"] = c.sweep_distances;
  j["cv_folds"] = c.cv_folds;
  j["min_plots_per_cell"] = c.min_plots_per_cell;
  j["neighborhood"] = c.neighborhood;
  j["n_lags"] = c.n_lags;
  j["forest"] = {{"n_trees", c.forest.n_trees}, {"mtry", c.forest.mtry}, {"min_leaf", c.forest.min_leaf}};
  j["top_k"] = c.top_k;
  j["importance_repetitions"] = c.importance_repetitions;
  j["signal"] = {{"k", c.process.signal.k},
                 {"noise_fraction", c.process.signal.noise_fraction},
                 {"sd_floor", c.process.signal.sd_floor}};
  j["filter"] = {{"min_snr", c.process.filter.min_snr},
                 {"cloud_ok", c.process.filter.cloud_ok},
                 {"max_elev_gap", c.process.filter.max_elev_gap}};
  j["max_components"] = c.process.max_components;
  j["carbon_convention"] = c.carbon_convention;
  j["seed"] = c.seed;
  return j;
}

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) fail(Errc::ConfigError, where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) fail(Errc::ConfigError, "unknown key '" + k + "' in " + where);
}

template <class T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ConfigError, std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace detail

/// Parses a config object; missing keys keep their defaults, unknown keys
/// are an error.
inline RunConfig run_config_from_json(const nlohmann::json& j) {
  detail::reject_unknown(j,
                         {"waveforms", "dem", "plots", "covariates", "categorical", "out_dir", "grid_sizes", "trend",
                          "max_match_distance", "sweep_distances", "cv_folds", "min_plots_per_cell", "neighborhood",
                          "n_lags", "forest", "top_k", "importance_repetitions", "signal", "filter", "max_components",
                          "carbon_convention", "seed"},
                         "run config");
  RunConfig c;
  detail::read_key(j, "waveforms", c.waveforms);
  detail::read_key(j, "dem", c.dem);
  detail::read_key(j, "plots", c.plots);
  if (j.contains("covariates")) {
    const auto& a = j.at("covariates");
    if (!a.is_array()) fail(Errc::ConfigError, "covariates must be an array");
    for (const auto& e : a) {
      detail::reject_unknown(e, {"name", "path"}, "covariate entry");
      CovariateInput ci;
      detail::read_key(e, "name", ci.name);
      detail::read_key(e, "path", ci.path);
      c.covariates.push_back(ci);
    }
  }
  detail::read_key(j, "categorical", c.categorical);
  detail::read_key(j, "out_dir", c.out_dir);
  detail::read_key(j, "grid_sizes", c.grid_sizes);
  detail::read_key(j, "trend", c.trend);
  detail::read_key(j, "max_match_distance", c.max_match_distance);
  detail::read_key(j, "sweep_distances", c.sweep_distances);
  detail::read_key(j, "cv_folds", c.cv_folds);
  detail::read_key(j, "min_plots_per_cell", c.min_plots_per_cell);
  detail::read_key(j, "neighborhood", c.neighborhood);
  detail::read_key(j, "n_lags", c.n_lags);
  if (j.contains("forest")) {
    const auto& f = j.at("forest");
    detail::reject_unknown(f, {"n_trees", "mtry", "min_leaf"}, "forest");
    detail::read_key(f, "n_trees", c.forest.n_trees);
    detail::read_key(f, "mtry", c.forest.mtry);
    detail::read_key(f, "min_leaf", c.forest.min_leaf);
  }
  detail::read_key(j, "top_k", c.top_k);
  detail::read_key(j, "importance_repetitions", c.importance_repetitions);
  if (j.contains("signal")) {
    const auto& s = j.at("signal");
    detail::reject_unknown(s, {"k", "noise_fraction", "sd_floor"}, "signal");
    detail::read_key(s, "k", c.process.signal.k);
    detail::read_key(s, "noise_fraction", c.process.signal.noise_fraction);
    detail::read_key(s, "sd_floor", c.process.signal.sd_floor);
  }
  if (j.contains("filter")) {
    const auto& f = j.at("filter");
    detail::reject_unknown(f, {"min_snr", "cloud_ok", "max_elev_gap"}, "filter");
    detail::read_key(f, "min_snr", c.process.filter.min_snr);
    detail::read_key(f, "cloud_ok", c.process.filter.cloud_ok);
    detail::read_key(f, "max_elev_gap", c.process.filter.max_elev_gap);
  }
  detail::read_key(j, "max_components", c.process.max_components);
  detail::read_key(j, "carbon_convention", c.carbon_convention);
  detail::read_key(j, "seed", c.seed);
  return c;
}

/// Rewrites relative input and output paths against `base`.
inline void resolve_paths(RunConfig& c, const std::filesystem::path& base) {
  auto fix = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  fix(c.waveforms);
  fix(c.dem);
  fix(c.plots);
  fix(c.out_dir);
  for (auto& cv : c.covariates) fix(cv.path);
}

/// Loads a config file; paths are left as written. Call resolve_paths to
/// anchor them.
inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot read " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::ConfigError, path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

inline void save_run_config(const std::filesystem::path& path, const RunConfig& c) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot write " + path.string());
  out << to_json(c).dump(2) << '\n';
}

/// FNV-1a of the canonical (sorted-key, compact) JSON form.
inline std::string config_hash(const RunConfig& c) { return text::hex64(text::fnv1a(to_json(c).dump())); }

}  // namespace agb::pipeline
