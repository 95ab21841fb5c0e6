#pragma once

#include <algorithm>
#include <cmath>

#include "agbmap/raster/grid.hpp"

namespace agb::raster {

/// Per-cell min, mean and max over the bands of a time series, ignoring
/// nodata. Output bands are named "min", "mean", "max".
inline GridStack temporal_composites(const GridStack& series) {
  require(!series.empty(), Errc::TooFewBands, "temporal composites need at least one band");
  const auto& geom = series.geometry();
  const double nodata = series.band(0).nodata();
  Grid lo(geom, nodata), mean(geom, nodata), hi(geom, nodata);
  for (std::size_t i = 0; i < geom.cell_count(); ++i) {
    double mn = INFINITY, mx = -INFINITY, sum = 0.0;
    int n = 0;
    for (std::size_t b = 0; b < series.size(); ++b) {
      const Grid& band = series.band(b);
      if (!band.is_valid(i)) continue;
      const double v = band.values()[i];
      mn = std::min(mn, v);
      mx = std::max(mx, v);
      sum += v;
      ++n;
    }
    if (n == 0) continue;
    lo.values()[i] = mn;
    mean.values()[i] = sum / n;
    hi.values()[i] = mx;
  }
  GridStack out;
  out.add("min", std::move(lo));
  out.add("mean", std::move(mean));
  out.add("max", std::move(hi));
  return out;
}

}  // namespace agb::raster
