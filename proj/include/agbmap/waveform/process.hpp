#pragma once

// Per-footprint processing chain: bounds, quality filter, decomposition,
// metrics. Batches run in parallel with one output slot per record.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "agbmap/parallel.hpp"
#include "agbmap/raster/grid.hpp"
#include "agbmap/waveform/decompose.hpp"
#include "agbmap/waveform/filter.hpp"
#include "agbmap/waveform/io.hpp"
#include "agbmap/waveform/metrics.hpp"
#include "agbmap/waveform/signal.hpp"

namespace agb::waveform {

struct ProcessOptions {
  SignalOptions signal;
  FilterOptions filter;
  int max_components = 6;
  double fit_margin_m = 5.0;  ///< fit window extends this far past the bounds
};

struct FootprintOutcome {
  RejectReason reason = RejectReason::None;
  std::optional<SignalBounds> bounds;
  std::vector<GaussianComponent> components;
  std::optional<WaveformMetrics> metrics;
  bool kept() const noexcept { return reason == RejectReason::None; }
};

/// 3x3 DEM elevations centered on the cell containing p; cells outside the
/// grid or on nodata are NaN.
inline DemPatch dem_patch_at(const raster::Grid& dem, Point2 p) {
  DemPatch patch;
  patch.cellsize = dem.cellsize();
  patch.z.fill(std::numeric_limits<double>::quiet_NaN());
  const auto rc = dem.geometry().cell_of(p);
  if (!rc) return patch;
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc) {
      const int r = rc->first + dr, c = rc->second + dc;
      if (r < 0 || c < 0 || r >= dem.nrows() || c >= dem.ncols() || !dem.is_valid(r, c)) continue;
      patch.z[static_cast<std::size_t>(3 * (dr + 1) + dc + 1)] = dem.at(r, c);
    }
  return patch;
}

inline FootprintOutcome process_waveform(const WaveformRecord& w, const DemPatch& patch,
                                         const ProcessOptions& opt = {}) {
  FootprintOutcome out;
  try {
    out.bounds = detect_signal_bounds(w, opt.signal);
  } catch (const Error& e) {
    if (e.code() != Errc::NoSignal && e.code() != Errc::DegenerateNoise) throw;
  }
  out.reason = quality_filter(w, out.bounds, opt.filter).reason;
  if (!out.kept()) return out;

  DecomposeOptions dopt;
  dopt.max_components = opt.max_components;
  // a component below the detection threshold is indistinguishable from noise
  dopt.min_amplitude = opt.signal.k * out.bounds->noise.sd;
  const auto margin = static_cast<std::size_t>(std::ceil(opt.fit_margin_m / w.bin_size));
  dopt.first_bin = out.bounds->begin_bin > margin ? out.bounds->begin_bin - margin : 0;
  dopt.last_bin = out.bounds->end_bin + margin;
  try {
    out.components = decompose_gaussians(w, out.bounds->noise, dopt).components;
    out.metrics = extract_metrics(w, *out.bounds, out.components, patch);
  } catch (const Error& e) {
    if (e.code() != Errc::FitFailure) throw;
    out.reason = RejectReason::FitFailure;
  }
  return out;
}

/// Processes every record; `dem` supplies the 3x3 patch under each footprint.
inline std::vector<FootprintOutcome> process_batch(const std::vector<WaveformRecord>& records,
                                                   const raster::Grid& dem, const ProcessOptions& opt = {}) {
  std::vector<FootprintOutcome> out(records.size());
  parallel_for(records.size(), [&](std::size_t i) {
    const auto& w = records[i];
    out[i] = process_waveform(w, dem_patch_at(dem, {w.lon, w.lat}), opt);
  });
  return out;
}

inline std::vector<FootprintMetrics> kept_metrics(const std::vector<WaveformRecord>& records,
                                                  const std::vector<FootprintOutcome>& outcomes) {
  std::vector<FootprintMetrics> out;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (outcomes[i].kept())
      out.push_back({records[i].id, records[i].lon, records[i].lat, *outcomes[i].metrics});
  return out;
}

}  // namespace agb::waveform
