#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "agbmap/random.hpp"
#include "agbmap/regression/design.hpp"

namespace agb::regression {

/// Maps a design to predictions for each of its rows.
using Predictor = std::function<Eigen::VectorXd(const DesignMatrix&)>;
/// Trains on a design and returns the fitted predictor.
using Fitter = std::function<Predictor(const DesignMatrix&)>;

struct CvResult {
  double r2 = 0.0;
  double rmse = 0.0;
  Eigen::VectorXd predictions;  ///< out-of-fold, aligned with the input rows
};

/// Coefficient of determination 1 - SSres/SStot; a constant reference scores
/// 1 when matched exactly and 0 otherwise.
inline double r_squared(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted) {
  const double mean = observed.mean();
  const double ss_tot = (observed.array() - mean).square().sum();
  const double ss_res = (observed - predicted).squaredNorm();
  if (ss_tot == 0) return ss_res == 0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

inline double rmse(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted) {
  return std::sqrt((observed - predicted).squaredNorm() / static_cast<double>(observed.size()));
}

/// Seeded fold assignment: a shuffled row order dealt round-robin into k
/// disjoint folds.
inline std::vector<int> fold_assignment(std::size_t n, int k, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed, 0xC5);
  shuffle(order, rng);
  std::vector<int> fold(n);
  for (std::size_t i = 0; i < n; ++i) fold[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  return fold;
}

/// k-fold cross validation scoring the pooled out-of-fold predictions.
inline CvResult kfold_cv(const DesignMatrix& d, const Fitter& fitter, int k = 10, std::uint64_t seed = 0) {
  const std::size_t n = d.rows();
  if (k < 2 || static_cast<std::size_t>(k) > n)
    fail(Errc::BadK, "k must be in [2, n]; got k=" + std::to_string(k) + " for n=" + std::to_string(n));
  const auto fold = fold_assignment(n, k, seed);
  CvResult res;
  res.predictions.resize(static_cast<Eigen::Index>(n));
  for (int f = 0; f < k; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? test : train).push_back(i);
    const auto predictor = fitter(d.subset_rows(train));
    const Eigen::VectorXd pred = predictor(d.subset_rows(test));
    for (std::size_t t = 0; t < test.size(); ++t)
      res.predictions(static_cast<Eigen::Index>(test[t])) = pred(static_cast<Eigen::Index>(t));
  }
  res.r2 = r_squared(d.y, res.predictions);
  res.rmse = rmse(d.y, res.predictions);
  return res;
}

}  // namespace agb::regression
