#pragma once

// Wall-to-wall mapping: covariate trend fitted to footprint AGB, residual
// kriging on top of it, and validation against plot means per cell.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "agbmap/allometry.hpp"
#include "agbmap/geostat/kriging.hpp"
#include "agbmap/geostat/variogram.hpp"
#include "agbmap/raster/resample.hpp"
#include "agbmap/regression/cv.hpp"
#include "agbmap/regression/forest.hpp"
#include "agbmap/regression/importance.hpp"
#include "agbmap/regression/linear.hpp"
#include "agbmap/regression/persist.hpp"

namespace agb::pipeline {

enum class TrendKind { Linear, RandomForest };

inline TrendKind parse_trend(std::string_view s) {
  if (s == "lm") return TrendKind::Linear;
  if (s == "rf") return TrendKind::RandomForest;
  fail(Errc::InvalidArgument, "trend must be 'lm' or 'rf', got '" + std::string(s) + "'");
}

inline std::string to_string(TrendKind k) { return k == TrendKind::Linear ? "lm" : "rf"; }

struct MapOptions {
  TrendKind trend = TrendKind::RandomForest;
  regression::ForestParams forest{};
  std::vector<std::string> categorical{"geol"};  ///< bands holding class codes
  int top_k = 0;                                 ///< keep the k most important covariates; 0 keeps all
  int importance_repetitions = 50;
  std::size_t neighborhood = geostat::kDefaultNeighborhood;
  int n_lags = 30;
  std::uint64_t seed = 0;
};

struct MapProduct {
  double grid_size = 0.0;
  raster::Grid trend;
  raster::Grid agb;        ///< trend + kriged residual, clamped at 0
  raster::Grid krige_var;  ///< nodata everywhere when kriging was skipped
  geostat::EmpiricalVariogram empirical;
  geostat::VariogramModel variogram;
  bool variogram_failed = false;
  std::string warning;
  regression::Model trend_model;
  std::vector<std::string> covariates;  ///< used by the trend model
  std::vector<regression::FeatureImportance> importance;
  std::size_t n_samples = 0;  ///< footprints with complete covariates
  std::size_t n_clamped = 0;  ///< map cells raised to 0
};

inline bool is_categorical(const MapOptions& o, const std::string& band) {
  return std::find(o.categorical.begin(), o.categorical.end(), band) != o.categorical.end();
}

/// Every band aggregated to grid_size: class bands by mode, others by mean.
inline raster::GridStack resample_covariates(const raster::GridStack& stack, double grid_size,
                                             const std::vector<std::string>& categorical = {"geol"}) {
  raster::GridStack out;
  for (std::size_t i = 0; i < stack.size(); ++i) {
    const bool cat = std::find(categorical.begin(), categorical.end(), stack.name(i)) != categorical.end();
    out.add(stack.name(i),
            raster::resample_to(stack.band(i), grid_size, cat ? raster::Aggregation::Mode : raster::Aggregation::Mean));
  }
  return out;
}

namespace detail {

inline std::vector<std::pair<int, int>> complete_cells(const raster::GridStack& cov) {
  const auto& g = cov.geometry();
  std::vector<std::pair<int, int>> cells;
  for (int r = 0; r < g.nrows; ++r)
    for (int c = 0; c < g.ncols; ++c) {
      bool ok = true;
      for (std::size_t b = 0; b < cov.size() && ok; ++b) ok = cov.band(b).is_valid(r, c);
      if (ok) cells.emplace_back(r, c);
    }
  return cells;
}

inline regression::DesignMatrix design_shell(const raster::GridStack& cov, const MapOptions& o, std::size_t rows) {
  regression::DesignMatrix d;
  d.names = cov.names();
  for (const auto& n : d.names)
    d.kinds.push_back(is_categorical(o, n) ? regression::FeatureKind::Categorical
                                           : regression::FeatureKind::Continuous);
  d.x.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cov.size()));
  d.y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows));
  return d;
}

}  // namespace detail

/// Covariates at the cell containing each sample, with the sample value as
/// target. Samples outside the grid or on an incomplete cell are skipped;
/// `used` lists the sample indices kept.
inline regression::DesignMatrix sample_design(const raster::GridStack& cov, const geostat::SampleSet& s,
                                              const MapOptions& o, std::vector<std::size_t>& used) {
  const auto& g = cov.geometry();
  used.clear();
  std::vector<std::pair<int, int>> cells;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto rc = g.cell_of(s.locations[i]);
    if (!rc) continue;
    bool ok = true;
    for (std::size_t b = 0; b < cov.size() && ok; ++b) ok = cov.band(b).is_valid(rc->first, rc->second);
    if (!ok) continue;
    used.push_back(i);
    cells.push_back(*rc);
  }
  auto d = detail::design_shell(cov, o, used.size());
  for (std::size_t k = 0; k < used.size(); ++k) {
    for (std::size_t b = 0; b < cov.size(); ++b)
      d.x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(b)) = cov.band(b).at(cells[k].first, cells[k].second);
    d.y(static_cast<Eigen::Index>(k)) = s.values[used[k]];
  }
  return d;
}

/// Full regression-kriging chain on covariates already at grid_size.
/// An exponential fit failure leaves the trend as the final map and sets
/// variogram_failed.
inline MapProduct build_map(const geostat::SampleSet& agb_glas, const raster::GridStack& covariates,
                            double grid_size, const MapOptions& opt = {}) {
  require(!agb_glas.empty(), Errc::TooFewSamples, "no footprint AGB samples to map");
  require(!covariates.empty(), Errc::TooFewBands, "no covariates to map with");
  const auto& geom = covariates.geometry();
  require(std::abs(geom.cellsize - grid_size) <= 1e-9 * grid_size, Errc::GeometryMismatch,
          "covariates are at " + text::format_exact(geom.cellsize) + " m, map requested at " +
              text::format_exact(grid_size) + " m");

  MapProduct out;
  out.grid_size = grid_size;
  std::vector<std::size_t> used;
  auto d = sample_design(covariates, agb_glas, opt, used);
  require(d.rows() >= 2, Errc::TooFewSamples, "fewer than two footprints fall on complete covariate cells");
  out.n_samples = d.rows();

  if (opt.top_k > 0 && static_cast<std::size_t>(opt.top_k) < d.cols()) {
    out.importance = regression::rf_importance(d, opt.forest, opt.importance_repetitions, derive_seed(opt.seed, 0x1F));
    std::vector<std::size_t> order(d.cols());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return out.importance[a].mean > out.importance[b].mean; });
    order.resize(static_cast<std::size_t>(opt.top_k));
    std::sort(order.begin(), order.end());
    d = d.select_columns(order);
  }
  out.covariates = d.names;

  // trend fit and residuals at the samples
  Eigen::VectorXd fitted;
  if (opt.trend == TrendKind::RandomForest) {
    // residuals against the full-forest surface the kriged field is added to
    auto f = regression::fit_random_forest(d, opt.forest, derive_seed(opt.seed, 0x7F));
    fitted = f.predict(d.x);
    out.trend_model = std::move(f);
  } else {
    auto lm = regression::fit_ols(regression::one_hot(d));
    fitted = lm.predict(d);
    out.trend_model = std::move(lm);
  }
  geostat::SampleSet residuals;
  for (std::size_t k = 0; k < used.size(); ++k)
    residuals.add(agb_glas.locations[used[k]], d.y(static_cast<Eigen::Index>(k)) - fitted(static_cast<Eigen::Index>(k)));

  // trend grid over complete cells
  const auto cells = detail::complete_cells(covariates);
  auto cd = detail::design_shell(covariates, opt, cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k)
    for (std::size_t b = 0; b < covariates.size(); ++b)
      cd.x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(b)) =
          covariates.band(b).at(cells[k].first, cells[k].second);
  const Eigen::VectorXd tp =
      std::visit([&](const auto& m) -> Eigen::VectorXd { return m.predict(cd); }, out.trend_model);
  out.trend = raster::Grid(geom, raster::Grid::kDefaultNodata);
  for (std::size_t k = 0; k < cells.size(); ++k)
    out.trend.at(cells[k].first, cells[k].second) = tp(static_cast<Eigen::Index>(k));

  // residual variogram and kriging
  try {
    const auto dedup = geostat::deduplicate(residuals);
    const auto [w, max_lag] = geostat::default_lags(dedup, opt.n_lags);
    if (!(w > 0)) fail(Errc::FitFailure, "residual samples share one location");
    out.empirical = geostat::empirical_variogram(dedup, w, max_lag);
    out.variogram = geostat::fit_exponential(out.empirical);
    // residuals with no variance left relative to the samples: nothing to krige
    const double var_y = (d.y.array() - d.y.mean()).square().mean();
    if (!(out.variogram.sill() > 1e-12 * std::max(1.0, var_y)))
      fail(Errc::FitFailure, "residual variogram has zero sill");
  } catch (const Error& e) {
    if (e.code() != Errc::FitFailure && e.code() != Errc::TooFewSamples) throw;
    out.variogram_failed = true;
    out.warning = std::string("variogram fit failed, map is trend only: ") + e.what();
  }
  if (out.variogram_failed) {
    out.agb = out.trend;
    out.krige_var = raster::Grid(geom, raster::Grid::kDefaultNodata);
  } else {
    auto rk = geostat::regression_krige(out.trend, residuals, out.variogram, opt.neighborhood);
    out.agb = std::move(rk.final);
    out.krige_var = std::move(rk.variance);
  }
  for (auto& v : out.agb.values())
    if (out.agb.is_valid_value(v) && v < 0) {
      v = 0.0;
      ++out.n_clamped;
    }
  return out;
}

struct ValidationCell {
  int row = 0;
  int col = 0;
  std::size_t n_plots = 0;
  double observed = 0.0;  ///< mean plot AGB in the cell
  double predicted = 0.0;
};

struct ValidationResult {
  double rmsep = std::numeric_limits<double>::quiet_NaN();
  double r2 = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_cells = 0;
  std::vector<ValidationCell> cells;
};

/// Cells with at least min_count plots and a valid map value, compared with
/// the mean plot AGB they contain.
inline ValidationResult validate_map(const raster::Grid& map, const std::vector<allometry::PlotRecord>& plots,
                                     int min_count = 4) {
  require(min_count >= 1, Errc::InvalidArgument, "min_count must be >= 1");
  std::map<std::pair<int, int>, std::pair<double, std::size_t>> acc;
  for (const auto& p : plots) {
    const auto rc = map.geometry().cell_of({p.lon, p.lat});
    if (!rc) continue;
    auto& a = acc[*rc];
    a.first += allometry::plot_agb_density(p);
    ++a.second;
  }
  ValidationResult r;
  for (const auto& [rc, a] : acc) {
    if (a.second < static_cast<std::size_t>(min_count) || !map.is_valid(rc.first, rc.second)) continue;
    r.cells.push_back({rc.first, rc.second, a.second, a.first / static_cast<double>(a.second), map.at(rc.first, rc.second)});
  }
  if (r.cells.empty())
    fail(Errc::NoQualifyingCells, "no map cell holds at least " + std::to_string(min_count) + " plots");
  r.n_cells = r.cells.size();
  Eigen::VectorXd obs(static_cast<Eigen::Index>(r.n_cells)), pred(static_cast<Eigen::Index>(r.n_cells));
  for (std::size_t i = 0; i < r.n_cells; ++i) {
    obs(static_cast<Eigen::Index>(i)) = r.cells[i].observed;
    pred(static_cast<Eigen::Index>(i)) = r.cells[i].predicted;
  }
  r.rmsep = regression::rmse(obs, pred);
  r.r2 = regression::r_squared(obs, pred);
  return r;
}

inline text::CsvTable validation_table(const ValidationResult& v, const raster::GridGeometry& g) {
  text::CsvTable t({"row", "col", "x", "y", "n_plots", "observed", "predicted"});
  for (const auto& c : v.cells) {
    const auto p = g.cell_center(c.row, c.col);
    t.add_row({std::to_string(c.row), std::to_string(c.col), text::format_exact(p.x), text::format_exact(p.y),
               std::to_string(c.n_plots), text::format_exact(c.observed), text::format_exact(c.predicted)});
  }
  return t;
}

/// RMSE of a map against a reference grid over cells valid in both.
inline double grid_rmse(const raster::Grid& map, const raster::Grid& reference) {
  require(map.geometry() == reference.geometry(), Errc::GeometryMismatch, "map and reference grids differ");
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (!map.is_valid(i) || !reference.is_valid(i)) continue;
    const double e = map.values()[i] - reference.values()[i];
    ss += e * e;
    ++n;
  }
  return n ? std::sqrt(ss / static_cast<double>(n)) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace agb::pipeline
