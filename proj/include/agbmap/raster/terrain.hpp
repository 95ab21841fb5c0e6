#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "agbmap/parallel.hpp"
#include "agbmap/raster/grid.hpp"

namespace agb::raster {

struct TerrainDerivatives {
  Grid slope;      ///< degrees
  Grid roughness;  ///< meters, population SD over the 3x3 window
};

/// Horn slope and 3x3 roughness of a DEM in meters. Window cells outside the
/// grid or on nodata take the center value for the slope kernel and are
/// skipped for roughness. Nodata centers stay nodata.
inline TerrainDerivatives dem_derivatives(const Grid& dem) {
  const auto& g = dem.geometry();
  TerrainDerivatives out{Grid(g, dem.nodata()), Grid(g, dem.nodata())};
  const double cs = g.cellsize;

  parallel_for(static_cast<std::size_t>(g.nrows), [&](std::size_t r) {
    const int row = static_cast<int>(r);
    for (int col = 0; col < g.ncols; ++col) {
      if (!dem.is_valid(row, col)) continue;
      const double center = dem.at(row, col);
      // z[dr+1][dc+1]
      std::array<std::array<double, 3>, 3> z{};
      double sum = 0.0, sum2 = 0.0;
      int n = 0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = row + dr, cc = col + dc;
          const bool inside = rr >= 0 && rr < g.nrows && cc >= 0 && cc < g.ncols && dem.is_valid(rr, cc);
          const double v = inside ? dem.at(rr, cc) : center;
          z[dr + 1][dc + 1] = v;
          if (inside) {
            const double d = v - center;
            sum += d;
            sum2 += d * d;
            ++n;
          }
        }
      const double dzdx = ((z[0][2] + 2 * z[1][2] + z[2][2]) - (z[0][0] + 2 * z[1][0] + z[2][0])) / (8 * cs);
      const double dzdy = ((z[0][0] + 2 * z[0][1] + z[0][2]) - (z[2][0] + 2 * z[2][1] + z[2][2])) / (8 * cs);
      out.slope.at(row, col) = std::atan(std::hypot(dzdx, dzdy)) * 180.0 / std::numbers::pi;
      const double m = sum / n;
      out.roughness.at(row, col) = std::sqrt(std::max(0.0, sum2 / n - m * m));
    }
  });
  return out;
}

}  // namespace agb::raster
