#pragma once

// Footprint-scale calibration: pairing field plots with LiDAR footprints,
// the stepwise linear model of waveform metrics, and its application to
// every kept footprint.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "agbmap/allometry.hpp"
#include "agbmap/geostat/samples.hpp"
#include "agbmap/random.hpp"
#include "agbmap/raster/match.hpp"
#include "agbmap/regression/cv.hpp"
#include "agbmap/regression/stepwise.hpp"
#include "agbmap/waveform/io.hpp"

namespace agb::pipeline {

struct PlotSplit {
  std::vector<allometry::PlotRecord> calibration;
  std::vector<allometry::PlotRecord> validation;
};

/// Seeded 50/50 split. The first floor(n/2) plots of a shuffled order go to
/// calibration; each half keeps the input order.
inline PlotSplit split_plots(const std::vector<allometry::PlotRecord>& plots, std::uint64_t seed) {
  std::vector<std::size_t> order(plots.size());
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed, 0x5B);
  shuffle(order, rng);
  std::vector<char> is_cal(plots.size(), 0);
  for (std::size_t k = 0; k < plots.size() / 2; ++k) is_cal[order[k]] = 1;
  PlotSplit s;
  for (std::size_t i = 0; i < plots.size(); ++i) (is_cal[i] ? s.calibration : s.validation).push_back(plots[i]);
  return s;
}

struct CalibrationPair {
  std::size_t plot = 0;
  std::size_t footprint = 0;
  double distance = 0.0;
};

/// Each plot paired with its nearest footprint within max_dist.
inline std::vector<CalibrationPair> pair_plots(const std::vector<allometry::PlotRecord>& plots,
                                               const std::vector<waveform::FootprintMetrics>& footprints,
                                               double max_dist) {
  std::vector<Point2> a, b;
  for (const auto& p : plots) a.push_back({p.lon, p.lat});
  for (const auto& f : footprints) b.push_back({f.lon, f.lat});
  std::vector<CalibrationPair> out;
  for (const auto& m : raster::match_points(a, b, max_dist)) out.push_back({m.a, m.b, m.dist});
  return out;
}

/// Design over the 15 waveform/DEM metrics with plot AGB as target.
inline regression::DesignMatrix pair_design(const std::vector<allometry::PlotRecord>& plots,
                                            const std::vector<waveform::FootprintMetrics>& footprints,
                                            const std::vector<CalibrationPair>& pairs) {
  regression::DesignMatrix d;
  d.names = waveform::metric_names();
  d.x.resize(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(d.names.size()));
  d.y.resize(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    const auto v = waveform::metric_values(footprints[pairs[r].footprint].metrics);
    for (std::size_t j = 0; j < v.size(); ++j) d.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = v[j];
    d.y(static_cast<Eigen::Index>(r)) = allometry::plot_agb_density(plots[pairs[r].plot]);
  }
  return d;
}

inline regression::Fitter stepwise_fitter() {
  return [](const regression::DesignMatrix& train) -> regression::Predictor {
    const auto m = regression::stepwise_bic(train).model;
    return [m](const regression::DesignMatrix& d) { return m.predict(d); };
  };
}

struct CalibrationSweepRow {
  double max_dist = 0.0;
  std::size_t n_pairs = 0;
  double r2 = std::numeric_limits<double>::quiet_NaN();
  double rmse = std::numeric_limits<double>::quiet_NaN();
};

inline constexpr std::size_t kMinSweepPairs = 4;

/// For each distance: pair plots with footprints, then score the stepwise
/// metric model by k-fold cross validation (k capped at the pair count).
/// Distances with fewer than 4 pairs report NaN scores; a distance with no
/// pair at all is an error.
inline std::vector<CalibrationSweepRow> calibration_sweep(const std::vector<allometry::PlotRecord>& plots,
                                                          const std::vector<waveform::FootprintMetrics>& footprints,
                                                          const std::vector<double>& distances, int k = 10,
                                                          std::uint64_t seed = 0) {
  std::vector<CalibrationSweepRow> rows;
  for (double dist : distances) {
    require(dist > 0 && std::isfinite(dist), Errc::InvalidArgument, "sweep distances must be > 0");
    const auto pairs = pair_plots(plots, footprints, dist);
    if (pairs.empty()) fail(Errc::NoPairs, "no plot has a footprint within " + text::format_exact(dist) + " m");
    CalibrationSweepRow row;
    row.max_dist = dist;
    row.n_pairs = pairs.size();
    if (pairs.size() >= kMinSweepPairs) {
      const auto d = pair_design(plots, footprints, pairs);
      const int folds = std::min<int>(k, static_cast<int>(pairs.size()));
      const auto cv = regression::kfold_cv(d, stepwise_fitter(), folds, seed);
      row.r2 = cv.r2;
      row.rmse = cv.rmse;
    }
    rows.push_back(row);
  }
  return rows;
}

inline text::CsvTable sweep_table(const std::vector<CalibrationSweepRow>& rows) {
  text::CsvTable t({"max_dist", "n_pairs", "r2", "rmse"});
  for (const auto& r : rows)
    t.add_row({text::format_exact(r.max_dist), std::to_string(r.n_pairs), text::format_exact(r.r2),
               text::format_exact(r.rmse)});
  return t;
}

/// Stepwise-BIC linear model of plot AGB on the footprint metrics. Needs at
/// least two pairs per candidate metric.
inline regression::LinearModel fit_glas_agb_model(const regression::DesignMatrix& pairs) {
  if (pairs.rows() < 2 * pairs.cols())
    fail(Errc::InsufficientPairs, std::to_string(pairs.rows()) + " calibration pairs for " +
                                      std::to_string(pairs.cols()) + " candidate metrics; need at least " +
                                      std::to_string(2 * pairs.cols()));
  return regression::stepwise_bic(pairs).model;
}

struct FootprintPrediction {
  std::vector<std::string> ids;
  geostat::SampleSet samples;  ///< AGB estimate at each footprint
  std::size_t n_clamped = 0;   ///< negative predictions set to 0
};

inline FootprintPrediction predict_footprints(const regression::LinearModel& model,
                                              const std::vector<waveform::FootprintMetrics>& footprints) {
  FootprintPrediction out;
  if (footprints.empty()) return out;
  regression::DesignMatrix d;
  d.names = waveform::metric_names();
  d.x.resize(static_cast<Eigen::Index>(footprints.size()), static_cast<Eigen::Index>(d.names.size()));
  for (std::size_t r = 0; r < footprints.size(); ++r) {
    const auto v = waveform::metric_values(footprints[r].metrics);
    for (std::size_t j = 0; j < v.size(); ++j) d.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = v[j];
  }
  const Eigen::VectorXd pred = model.predict(d);
  for (std::size_t r = 0; r < footprints.size(); ++r) {
    double v = pred(static_cast<Eigen::Index>(r));
    if (v < 0) {
      v = 0.0;
      ++out.n_clamped;
    }
    out.ids.push_back(footprints[r].id);
    out.samples.add({footprints[r].lon, footprints[r].lat}, v);
  }
  return out;
}

inline text::CsvTable footprint_agb_table(const FootprintPrediction& p) {
  text::CsvTable t({"id", "x", "y", "agb"});
  for (std::size_t i = 0; i < p.ids.size(); ++i)
    t.add_row({p.ids[i], text::format_exact(p.samples.locations[i].x), text::format_exact(p.samples.locations[i].y),
               text::format_exact(p.samples.values[i])});
  return t;
}

}  // namespace agb::pipeline
