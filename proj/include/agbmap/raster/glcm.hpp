#pragma once

// Gray-level co-occurrence textures over a sliding window.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "agbmap/parallel.hpp"
#include "agbmap/raster/grid.hpp"

namespace agb::raster {

inline constexpr std::array<const char*, 8> kGlcmStatNames = {
    "mean", "variance", "homogeneity", "contrast", "dissimilarity", "entropy", "second_moment", "correlation"};

struct GlcmStats {
  double mean = 0.0;
  double variance = 0.0;
  double homogeneity = 0.0;
  double contrast = 0.0;
  double dissimilarity = 0.0;
  double entropy = 0.0;
  double second_moment = 0.0;
  double correlation = 0.0;

  std::array<double, 8> as_array() const {
    return {mean, variance, homogeneity, contrast, dissimilarity, entropy, second_moment, correlation};
  }
};

/// One nonzero co-occurrence entry (row level, column level, probability).
struct GlcmEntry {
  int i = 0;
  int j = 0;
  double p = 0.0;
};

/// Haralick statistics of a normalized symmetric co-occurrence matrix given
/// by its nonzero entries. Gray levels are 0-based indices. Correlation of a
/// matrix with zero variance is reported as 1.
inline GlcmStats glcm_statistics(const std::vector<GlcmEntry>& entries) {
  GlcmStats s;
  for (const auto& e : entries) s.mean += e.i * e.p;
  for (const auto& e : entries) {
    const double di = e.i - s.mean;
    const double dj = e.j - s.mean;
    const double d = static_cast<double>(e.i - e.j);
    s.variance += di * di * e.p;
    s.homogeneity += e.p / (1.0 + d * d);
    s.contrast += d * d * e.p;
    s.dissimilarity += std::abs(d) * e.p;
    if (e.p > 0) s.entropy -= e.p * std::log(e.p);
    s.second_moment += e.p * e.p;
    s.correlation += di * dj * e.p;
  }
  s.correlation = s.variance > 0 ? s.correlation / s.variance : 1.0;
  return s;
}

/// Gray-level index per cell over the global min-max range, -1 on nodata.
/// A constant grid quantizes to level 0 everywhere.
inline std::vector<int> quantize_levels(const Grid& g, int levels) {
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.is_valid(i)) lo = std::min(lo, g.values()[i]), hi = std::max(hi, g.values()[i]);
  std::vector<int> q(g.size(), -1);
  const double span = hi - lo;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g.is_valid(i)) continue;
    if (!(span > 0)) {
      q[i] = 0;
      continue;
    }
    int level = static_cast<int>(std::floor((g.values()[i] - lo) / span * levels));
    q[i] = std::clamp(level, 0, levels - 1);
  }
  return q;
}

/// Offsets at distance 1 for 0, 45, 90 and 135 degrees as (drow, dcol).
inline constexpr std::array<std::pair<int, int>, 4> kGlcmOffsets = {{{0, 1}, {-1, 1}, {-1, 0}, {-1, -1}}};

/// Normalized symmetric GLCM of the window centered on (row, col), pooled
/// over the four offsets. Empty when the window holds no valid pair.
inline std::vector<GlcmEntry> window_glcm(const std::vector<int>& levels_of, const GridGeometry& geom,
                                          int row, int col, int window) {
  const int half = window / 2;
  const int r0 = std::max(0, row - half), r1 = std::min(geom.nrows - 1, row + half);
  const int c0 = std::max(0, col - half), c1 = std::min(geom.ncols - 1, col + half);
  std::vector<GlcmEntry> entries;
  double total = 0.0;
  auto bump = [&](int a, int b) {
    for (auto& e : entries)
      if (e.i == a && e.j == b) {
        e.p += 1.0;
        return;
      }
    entries.push_back({a, b, 1.0});
  };
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) {
      const int a = levels_of[static_cast<std::size_t>(r) * geom.ncols + c];
      if (a < 0) continue;
      for (auto [dr, dc] : kGlcmOffsets) {
        const int rr = r + dr, cc = c + dc;
        if (rr < r0 || rr > r1 || cc < c0 || cc > c1) continue;
        const int b = levels_of[static_cast<std::size_t>(rr) * geom.ncols + cc];
        if (b < 0) continue;
        bump(a, b);
        bump(b, a);
        total += 2.0;
      }
    }
  for (auto& e : entries) e.p /= total;
  return entries;
}

/// Eight texture bands named after kGlcmStatNames. Cells whose own value is
/// nodata, or whose window has no valid pair, are nodata in every band.
inline GridStack glcm_textures(const Grid& g, int window = 3, int levels = 32) {
  require(window >= 1 && window % 2 == 1, Errc::InvalidArgument, "GLCM window must be odd");
  require(levels >= 2, Errc::InvalidArgument, "GLCM needs at least 2 gray levels");
  const auto q = quantize_levels(g, levels);
  const auto& geom = g.geometry();
  std::array<Grid, 8> bands;
  for (auto& b : bands) b = Grid(geom, g.nodata());

  parallel_for(static_cast<std::size_t>(geom.nrows), [&](std::size_t r) {
    const int row = static_cast<int>(r);
    for (int col = 0; col < geom.ncols; ++col) {
      if (q[g.index(row, col)] < 0) continue;
      const auto entries = window_glcm(q, geom, row, col, window);
      if (entries.empty()) continue;
      const auto stats = glcm_statistics(entries).as_array();
      for (std::size_t k = 0; k < stats.size(); ++k) bands[k].at(row, col) = stats[k];
    }
  });

  GridStack out;
  for (std::size_t k = 0; k < bands.size(); ++k) out.add(kGlcmStatNames[k], std::move(bands[k]));
  return out;
}

}  // namespace agb::raster
