#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "agbmap/regression/linear.hpp"

namespace agb::regression {

struct StepwiseResult {
  LinearModel model;
  LinearModel full_model;  ///< starting point, aliased columns removed
  int steps = 0;
};

/// Columns in order, skipping constants and any column that is a linear
/// combination of those already kept.
inline std::vector<std::size_t> non_aliased_columns(const DesignMatrix& d) {
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < d.cols(); ++j) {
    if (is_constant_column(d.x.col(static_cast<Eigen::Index>(j)))) continue;
    auto trial = kept;
    trial.push_back(j);
    if (detail::try_fit(d, trial)) kept = std::move(trial);
  }
  return kept;
}

/// Bidirectional stepwise selection by BIC starting from the full model.
/// Each step takes the single drop or add with the lowest BIC and stops when
/// no move lowers it. Aliased columns are removed from the start model but
/// stay eligible for later additions. Ties go to drops before adds, then to
/// column order.
inline StepwiseResult stepwise_bic(const DesignMatrix& d) {
  d.validate();
  require(d.rows() >= 2, Errc::EmptyDesign, "stepwise selection needs at least two rows");
  require(d.cols() >= 2, Errc::InvalidArgument, "stepwise selection needs at least two candidate features");
  std::vector<std::size_t> current = non_aliased_columns(d);
  auto full = detail::try_fit(d, current);
  if (!full) fail(Errc::RankDeficient, "no full-rank start model");

  StepwiseResult res;
  res.full_model = *full;
  LinearModel best = *full;
  std::vector<std::size_t> eligible;
  for (std::size_t j = 0; j < d.cols(); ++j)
    if (!is_constant_column(d.x.col(static_cast<Eigen::Index>(j)))) eligible.push_back(j);

  while (true) {
    std::optional<LinearModel> move;
    std::vector<std::size_t> move_cols;
    auto consider = [&](std::vector<std::size_t> cols) {
      auto m = detail::try_fit(d, cols);
      if (m && m->bic < best.bic && (!move || m->bic < move->bic)) {
        move = std::move(m);
        move_cols = std::move(cols);
      }
    };
    for (std::size_t k = 0; k < current.size(); ++k) {
      auto cols = current;
      cols.erase(cols.begin() + static_cast<std::ptrdiff_t>(k));
      consider(std::move(cols));
    }
    for (auto j : eligible) {
      if (std::find(current.begin(), current.end(), j) != current.end()) continue;
      auto cols = current;
      cols.insert(std::upper_bound(cols.begin(), cols.end(), j), j);
      consider(std::move(cols));
    }
    if (!move) break;
    best = std::move(*move);
    current = std::move(move_cols);
    ++res.steps;
  }
  res.model = std::move(best);
  return res;
}

}  // namespace agb::regression
