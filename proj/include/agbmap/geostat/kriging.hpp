#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "agbmap/geostat/samples.hpp"
#include "agbmap/geostat/variogram.hpp"
#include "agbmap/kdtree.hpp"
#include "agbmap/parallel.hpp"
#include "agbmap/raster/grid.hpp"

namespace agb::geostat {

inline constexpr std::size_t kDefaultNeighborhood = 32;

struct KrigingResult {
  double estimate = 0.0;
  double variance = 0.0;
  double lagrange = 0.0;
  std::vector<std::size_t> neighbors;  ///< sample indices, nearest first
  std::vector<double> weights;         ///< parallel to neighbors
};

/// Ordinary kriging over the nearest `neighborhood` samples, solving the
/// semivariance system
///   [ G  1 ] [l]   [g0]
///   [ 1' 0 ] [m] = [ 1]
/// with variance l'g0 + m. The spatial index is built once; predictions are
/// read-only and safe to run concurrently.
class OrdinaryKriger {
 public:
  OrdinaryKriger(SampleSet samples, VariogramModel model, std::size_t neighborhood = kDefaultNeighborhood)
      : s_(std::move(samples)), m_(model), k_(neighborhood) {
    s_.validate();
    m_.validate();
    require(k_ >= 1, Errc::InvalidArgument, "kriging neighborhood must be >= 1");
    tree_ = KdTree2(s_.locations);
  }

  const SampleSet& samples() const noexcept { return s_; }
  const VariogramModel& model() const noexcept { return m_; }

  KrigingResult predict(Point2 target) const {
    if (s_.empty()) fail(Errc::EmptyNeighborhood, "no samples to krige from");
    const auto nb = tree_.nearest(target, k_);
    const auto n = static_cast<Eigen::Index>(nb.size());
    Eigen::MatrixXd a(n + 1, n + 1);
    Eigen::VectorXd rhs(n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& pi = s_.locations[nb[static_cast<std::size_t>(i)].index];
      for (Eigen::Index j = 0; j < i; ++j) {
        const auto& pj = s_.locations[nb[static_cast<std::size_t>(j)].index];
        a(i, j) = a(j, i) = m_.gamma(std::sqrt(squared_distance(pi, pj)));
      }
      a(i, i) = 0.0;
      a(i, n) = a(n, i) = 1.0;
      rhs(i) = m_.gamma(std::sqrt(nb[static_cast<std::size_t>(i)].dist2));
    }
    a(n, n) = 0.0;
    rhs(n) = 1.0;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (lu.rank() < n + 1) fail(Errc::SingularSystem, "kriging system is singular (duplicate or degenerate neighbors)");
    const Eigen::VectorXd sol = lu.solve(rhs);

    KrigingResult r;
    r.lagrange = sol(n);
    r.neighbors.reserve(nb.size());
    r.weights.reserve(nb.size());
    double est = 0.0, var = sol(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto idx = nb[static_cast<std::size_t>(i)].index;
      r.neighbors.push_back(idx);
      r.weights.push_back(sol(i));
      est += sol(i) * s_.values[idx];
      var += sol(i) * rhs(i);
    }
    r.estimate = est;
    r.variance = std::max(0.0, var);
    return r;
  }

 private:
  SampleSet s_;
  VariogramModel m_;
  std::size_t k_;
  KdTree2 tree_;
};

inline KrigingResult ordinary_krige(const SampleSet& s, const VariogramModel& m, Point2 target,
                                    std::size_t neighborhood = kDefaultNeighborhood) {
  return OrdinaryKriger(s, m, neighborhood).predict(target);
}

struct RegressionKrigingResult {
  raster::Grid final;
  raster::Grid variance;
};

/// final = trend + kriged residual at every valid trend cell center. Cells
/// that are nodata in the trend stay nodata in both outputs.
inline RegressionKrigingResult regression_krige(const raster::Grid& trend, const SampleSet& residuals,
                                                const VariogramModel& m,
                                                std::size_t neighborhood = kDefaultNeighborhood) {
  const OrdinaryKriger kriger(deduplicate(residuals), m, neighborhood);
  const auto& g = trend.geometry();
  RegressionKrigingResult out{raster::Grid(g, trend.nodata()), raster::Grid(g, trend.nodata())};
  parallel_for(static_cast<std::size_t>(g.nrows), [&](std::size_t row) {
    const int r = static_cast<int>(row);
    for (int c = 0; c < g.ncols; ++c) {
      if (!trend.is_valid(r, c)) continue;
      const auto k = kriger.predict(g.cell_center(r, c));
      out.final.at(r, c) = trend.at(r, c) + k.estimate;
      out.variance.at(r, c) = k.variance;
    }
  });
  return out;
}

}  // namespace agb::geostat
