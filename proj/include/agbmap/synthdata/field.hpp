#pragma once

// Gaussian random field simulation: circulant embedding on regular grids and
// a dense Cholesky factor for scattered points.

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "agbmap/geostat/variogram.hpp"
#include "agbmap/random.hpp"
#include "agbmap/raster/grid.hpp"

namespace agb::synthdata {

/// Stationary isotropic covariance as a function of separation (meters).
using Covariance = std::function<double(double)>;

/// Continuous part of an exponential variogram; the nugget is handled as
/// independent noise by the simulators.
inline Covariance exponential_covariance(const geostat::VariogramModel& m) {
  return [psill = m.psill, range = m.range](double h) { return psill * std::exp(-3.0 * h / range); };
}

inline Covariance gaussian_covariance(double variance, double range) {
  return [variance, range](double h) { return variance * std::exp(-3.0 * (h / range) * (h / range)); };
}

namespace detail {

/// Smallest n' >= n whose only prime factors are 2, 3 and 5.
inline int fft_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

inline void fft2(std::vector<std::complex<double>>& a, int rows, int cols, bool inverse) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in, out;
  in.resize(static_cast<std::size_t>(cols));
  for (int r = 0; r < rows; ++r) {
    std::copy_n(a.begin() + static_cast<std::ptrdiff_t>(r) * cols, cols, in.begin());
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    std::copy_n(out.begin(), cols, a.begin() + static_cast<std::ptrdiff_t>(r) * cols);
  }
  in.resize(static_cast<std::size_t>(rows));
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) in[static_cast<std::size_t>(r)] = a[static_cast<std::size_t>(r) * cols + c];
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    for (int r = 0; r < rows; ++r) a[static_cast<std::size_t>(r) * cols + c] = out[static_cast<std::size_t>(r)];
  }
}

}  // namespace detail

/// Zero-mean field at the cell centers of `geom` with covariance `cov` plus
/// independent noise of variance `nugget`. The covariance is embedded in a
/// periodic grid of at least twice the extent; negative eigenvalues of the
/// embedding are set to zero.
inline raster::Grid simulate_grid_field(const raster::GridGeometry& geom, const Covariance& cov, double nugget,
                                        Rng& rng) {
  geom.validate();
  const int m = detail::fft_size(2 * geom.nrows);
  const int n = detail::fft_size(2 * geom.ncols);
  const auto size = static_cast<std::size_t>(m) * static_cast<std::size_t>(n);
  std::vector<std::complex<double>> lambda(size);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      const double dy = std::min(i, m - i) * geom.cellsize;
      const double dx = std::min(j, n - j) * geom.cellsize;
      lambda[static_cast<std::size_t>(i) * n + j] = cov(std::hypot(dx, dy));
    }
  detail::fft2(lambda, m, n, false);

  std::vector<std::complex<double>> z(size);
  const double scale = 1.0 / static_cast<double>(size);
  for (std::size_t k = 0; k < size; ++k) {
    const double ev = std::max(0.0, lambda[k].real());
    const double re = normal(rng), im = normal(rng);
    z[k] = std::sqrt(ev * scale) * std::complex<double>(re, im);
  }
  detail::fft2(z, m, n, false);

  raster::Grid g(geom, raster::Grid::kDefaultNodata, 0.0);
  const double nsd = std::sqrt(std::max(0.0, nugget));
  for (int r = 0; r < geom.nrows; ++r)
    for (int c = 0; c < geom.ncols; ++c) {
      double v = z[static_cast<std::size_t>(r) * n + c].real();
      if (nsd > 0) v += nsd * normal(rng);
      g.at(r, c) = v;
    }
  return g;
}

inline raster::Grid simulate_grid_field(const raster::GridGeometry& geom, const geostat::VariogramModel& model,
                                        Rng& rng) {
  return simulate_grid_field(geom, exponential_covariance(model), model.nugget, rng);
}

/// Exact simulation at scattered points through the Cholesky factor of the
/// full covariance matrix (nugget on the diagonal). O(n^3); meant for a few
/// thousand points.
inline std::vector<double> simulate_point_field(std::span<const Point2> pts, const geostat::VariogramModel& model,
                                                Rng& rng) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  const auto cov = exponential_covariance(model);
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j)
      c(i, j) = c(j, i) = cov(std::sqrt(squared_distance(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)])));
    c(i, i) = model.psill + model.nugget;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) {
    c.diagonal().array() += 1e-10 * (model.psill + model.nugget);
    llt.compute(c);
    if (llt.info() != Eigen::Success) fail(Errc::InvalidArgument, "covariance matrix is not positive definite");
  }
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
  const Eigen::VectorXd x = llt.matrixL() * z;
  return {x.data(), x.data() + n};
}

}  // namespace agb::synthdata
