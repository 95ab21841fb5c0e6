#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "agbmap/parallel.hpp"
#include "agbmap/regression/forest.hpp"

namespace agb::regression {

struct FeatureImportance {
  std::string name;
  double mean = 0.0;  ///< %IncMSE averaged over repetitions
  double sd = 0.0;    ///< sample SD over repetitions (0 for a single one)
  std::vector<double> per_repetition;
};

/// %IncMSE of every feature for one fitted forest: for each tree, the OOB
/// rows are scored before and after permuting one feature among them;
/// 100 * sum_t(mse_perm - mse_base) / sum_t(mse_base).
inline std::vector<double> permutation_importance(const Forest& f, const DesignMatrix& d, std::uint64_t perm_seed) {
  const std::size_t n = d.rows();
  const std::size_t p = d.cols();
  const std::size_t nt = f.trees.size();
  // [t][0] = base mse sum, [t][1 + j] = permuted mse sum
  std::vector<std::vector<double>> acc(nt, std::vector<double>(p + 1, 0.0));
  parallel_for(nt, [&](std::size_t t) {
    const auto oob = detail::out_of_bag(n, detail::bootstrap_rows(n, f.seed, t));
    if (oob.empty()) return;
    const auto& tree = f.trees[t];
    Eigen::RowVectorXd row(static_cast<Eigen::Index>(p));
    double base = 0.0;
    for (auto i : oob) {
      const double e = tree.predict(d.x.row(static_cast<Eigen::Index>(i))) - d.y(static_cast<Eigen::Index>(i));
      base += e * e;
    }
    acc[t][0] = base / static_cast<double>(oob.size());
    for (std::size_t j = 0; j < p; ++j) {
      if (!tree.uses_feature(static_cast<int>(j))) {
        acc[t][j + 1] = acc[t][0];
        continue;
      }
      auto perm = oob;
      auto rng = make_rng(perm_seed, t, j);
      shuffle(perm, rng);
      double s = 0.0;
      for (std::size_t k = 0; k < oob.size(); ++k) {
        row = d.x.row(static_cast<Eigen::Index>(oob[k]));
        row(static_cast<Eigen::Index>(j)) = d.x(static_cast<Eigen::Index>(perm[k]), static_cast<Eigen::Index>(j));
        const double e = tree.predict(row) - d.y(static_cast<Eigen::Index>(oob[k]));
        s += e * e;
      }
      acc[t][j + 1] = s / static_cast<double>(oob.size());
    }
  });
  double base = 0.0;
  std::vector<double> perm(p, 0.0);
  for (std::size_t t = 0; t < nt; ++t) {
    base += acc[t][0];
    for (std::size_t j = 0; j < p; ++j) perm[j] += acc[t][j + 1];
  }
  std::vector<double> out(p, 0.0);
  if (base > 0)
    for (std::size_t j = 0; j < p; ++j) out[j] = 100.0 * (perm[j] - base) / base;
  return out;
}

/// Refits the forest `repetitions` times with derived seeds and reports the
/// mean and SD of %IncMSE per feature.
inline std::vector<FeatureImportance> rf_importance(const DesignMatrix& d, const ForestParams& params = {},
                                                    int repetitions = 50, std::uint64_t seed = 0) {
  require(repetitions >= 1, Errc::InvalidArgument, "repetitions must be >= 1");
  std::vector<FeatureImportance> out(d.cols());
  for (std::size_t j = 0; j < d.cols(); ++j) out[j].name = d.names[j];
  for (int r = 0; r < repetitions; ++r) {
    const auto rep_seed = derive_seed(seed, 0x1A, static_cast<std::uint64_t>(r));
    const auto forest = fit_random_forest(d, params, rep_seed);
    const auto imp = permutation_importance(forest, d, derive_seed(rep_seed, 0x1B));
    for (std::size_t j = 0; j < d.cols(); ++j) out[j].per_repetition.push_back(imp[j]);
  }
  for (auto& fi : out) {
    double s = 0.0;
    for (double v : fi.per_repetition) s += v;
    fi.mean = s / repetitions;
    double ss = 0.0;
    for (double v : fi.per_repetition) ss += (v - fi.mean) * (v - fi.mean);
    fi.sd = repetitions > 1 ? std::sqrt(ss / (repetitions - 1)) : 0.0;
  }
  return out;
}

}  // namespace agb::regression
