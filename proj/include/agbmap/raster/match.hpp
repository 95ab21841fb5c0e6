#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "agbmap/kdtree.hpp"

namespace agb::raster {

struct PointMatch {
  std::size_t a = 0;
  std::size_t b = 0;
  double dist = 0.0;
};

/// Pairs each point of `a` with its nearest point of `b` when that neighbor
/// lies within max_dist. Equidistant neighbors resolve to the lowest b index.
inline std::vector<PointMatch> match_points(std::span<const Point2> a, std::span<const Point2> b,
                                            double max_dist) {
  std::vector<PointMatch> out;
  if (b.empty()) return out;
  const KdTree2 tree(b);
  const double max2 = max_dist * max_dist;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto nn = tree.nearest_one(a[i]);
    if (nn && nn->dist2 <= max2) out.push_back({i, nn->index, std::sqrt(nn->dist2)});
  }
  return out;
}

}  // namespace agb::raster
