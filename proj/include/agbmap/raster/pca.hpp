#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "agbmap/raster/grid.hpp"

namespace agb::raster {

struct PcaResult {
  GridStack components;         ///< PC1..PCn score bands
  Eigen::VectorXd eigenvalues;  ///< all eigenvalues, descending
  Eigen::MatrixXd loadings;     ///< columns are unit eigenvectors, same order
  Eigen::VectorXd band_means;
  std::size_t sample_count = 0;
};

/// Principal components of the band covariance over cells valid in every
/// band. Scores are projections of the centered data; a cell with nodata in
/// any band is nodata in every output band. Each eigenvector is signed so
/// its largest-magnitude loading is positive.
inline PcaResult pca_stack(const GridStack& stack, int n_components) {
  const int p = static_cast<int>(stack.size());
  if (n_components < 1 || p < n_components)
    fail(Errc::TooFewBands, "pca needs at least " + std::to_string(n_components) + " bands, stack has " +
                                std::to_string(p));
  const auto& geom = stack.geometry();
  const std::size_t ncell = geom.cell_count();

  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < ncell; ++i) {
    bool ok = true;
    for (int b = 0; b < p && ok; ++b) ok = stack.band(b).is_valid(i);
    if (ok) cells.push_back(i);
  }
  require(cells.size() >= 2, Errc::TooFewSamples, "pca needs at least two fully valid cells");

  Eigen::MatrixXd x(static_cast<Eigen::Index>(cells.size()), p);
  for (std::size_t k = 0; k < cells.size(); ++k)
    for (int b = 0; b < p; ++b) x(static_cast<Eigen::Index>(k), b) = stack.band(b).values()[cells[k]];

  PcaResult res;
  res.sample_count = cells.size();
  res.band_means = x.colwise().mean().transpose();
  x.rowwise() -= res.band_means.transpose();
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(cells.size() - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  require(eig.info() == Eigen::Success, Errc::FitFailure, "covariance eigendecomposition failed");
  // Eigen returns ascending eigenvalues
  res.eigenvalues = eig.eigenvalues().reverse();
  res.loadings = eig.eigenvectors().rowwise().reverse();
  for (int k = 0; k < p; ++k) {
    res.eigenvalues(k) = std::max(0.0, res.eigenvalues(k));
    Eigen::Index arg = 0;
    res.loadings.col(k).cwiseAbs().maxCoeff(&arg);
    if (res.loadings(arg, k) < 0) res.loadings.col(k) *= -1.0;
  }

  const Eigen::MatrixXd scores = x * res.loadings.leftCols(n_components);
  const double nodata = stack.band(0).nodata();
  for (int k = 0; k < n_components; ++k) {
    Grid band(geom, nodata);
    for (std::size_t c = 0; c < cells.size(); ++c)
      band.values()[cells[c]] = scores(static_cast<Eigen::Index>(c), k);
    res.components.add("PC" + std::to_string(k + 1), std::move(band));
  }
  return res;
}

}  // namespace agb::raster
