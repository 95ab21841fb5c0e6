#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "agbmap/parallel.hpp"
#include "agbmap/raster/grid.hpp"

namespace agb::raster {

enum class Aggregation { Mean, Median, Mode };

inline Aggregation parse_aggregation(std::string_view s) {
  if (s == "mean") return Aggregation::Mean;
  if (s == "median") return Aggregation::Median;
  if (s == "mode") return Aggregation::Mode;
  fail(Errc::InvalidArgument, "unknown aggregation '" + std::string(s) + "'");
}

inline double median_of(std::vector<double>& v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

/// Most frequent value; ties go to the smallest value. Meant for class rasters.
inline double mode_of(const std::vector<double>& v) {
  std::map<double, int> counts;
  for (double x : v) ++counts[x];
  double best = 0.0;
  int best_n = -1;
  for (const auto& [x, n] : counts)
    if (n > best_n) best = x, best_n = n;
  return best;
}

/// Aggregates factor x factor blocks into one cell, skipping nodata. Blocks
/// are anchored at the top-left corner; trailing partial blocks aggregate the
/// cells they have. A block with no valid cell becomes nodata.
inline Grid resample(const Grid& g, int factor, Aggregation scheme = Aggregation::Mean) {
  if (factor < 1) fail(Errc::BadFactor, "resample factor must be >= 1, got " + std::to_string(factor));
  if (factor == 1) return g;
  const auto& in = g.geometry();
  GridGeometry out_geom;
  out_geom.ncols = (in.ncols + factor - 1) / factor;
  out_geom.nrows = (in.nrows + factor - 1) / factor;
  out_geom.cellsize = in.cellsize * factor;
  out_geom.origin_x = in.origin_x;
  out_geom.origin_y = in.top() - out_geom.nrows * out_geom.cellsize;
  Grid out(out_geom, g.nodata());

  parallel_for(static_cast<std::size_t>(out_geom.nrows), [&](std::size_t orow) {
    std::vector<double> block;
    block.reserve(static_cast<std::size_t>(factor) * factor);
    for (int oc = 0; oc < out_geom.ncols; ++oc) {
      block.clear();
      const int r0 = static_cast<int>(orow) * factor;
      const int c0 = oc * factor;
      for (int r = r0; r < std::min(r0 + factor, in.nrows); ++r)
        for (int c = c0; c < std::min(c0 + factor, in.ncols); ++c)
          if (g.is_valid(r, c)) block.push_back(g.at(r, c));
      if (block.empty()) continue;
      double v = 0.0;
      switch (scheme) {
        case Aggregation::Mean: {
          for (double x : block) v += x;
          v /= static_cast<double>(block.size());
          break;
        }
        case Aggregation::Median: v = median_of(block); break;
        case Aggregation::Mode: v = mode_of(block); break;
      }
      out.at(static_cast<int>(orow), oc) = v;
    }
  });
  return out;
}

/// Resamples to a target cell size that must be an integer multiple of the
/// native one (within 1e-9 relative).
inline Grid resample_to(const Grid& g, double target_cellsize, Aggregation scheme = Aggregation::Mean) {
  const double ratio = target_cellsize / g.cellsize();
  const double rounded = std::round(ratio);
  if (rounded < 1 || std::abs(ratio - rounded) > 1e-9 * ratio)
    fail(Errc::BadFactor, "target cell size " + std::to_string(target_cellsize) +
                              " is not an integer multiple of " + std::to_string(g.cellsize()));
  return resample(g, static_cast<int>(rounded), scheme);
}

}  // namespace agb::raster
