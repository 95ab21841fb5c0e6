#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "agbmap/regression/design.hpp"

namespace agb::regression {

struct LinearModel {
  double intercept = 0.0;
  std::vector<std::string> selected_features;
  std::vector<double> coefficients;  ///< parallel to selected_features
  double rss = 0.0;
  double bic = 0.0;
  std::size_t n = 0;

  /// Predictions for every row of `d`. A selected feature named
  /// "<f>=<code>" that is not a column of `d` is evaluated as the indicator
  /// of categorical column f.
  Eigen::VectorXd predict(const DesignMatrix& d) const {
    Eigen::VectorXd out = Eigen::VectorXd::Constant(d.x.rows(), intercept);
    for (std::size_t k = 0; k < selected_features.size(); ++k) {
      const auto& name = selected_features[k];
      const auto j = d.find(name);
      if (j >= 0) {
        out += coefficients[k] * d.x.col(j);
        continue;
      }
      const auto eq = name.rfind('=');
      const auto base = eq == std::string::npos ? -1 : d.find(name.substr(0, eq));
      if (base < 0) fail(Errc::InvalidArgument, "design lacks model feature '" + name + "'");
      const double code = std::stod(name.substr(eq + 1));
      for (Eigen::Index i = 0; i < d.x.rows(); ++i)
        if (d.x(i, base) == code) out(i) += coefficients[k];
    }
    return out;
  }
};

/// n ln(RSS/n) + k ln n. RSS is floored at 1e-20 * max(1, sum y^2) so exact
/// fits stay finite and tie, leaving the parameter penalty to decide.
inline double bic_value(double rss, std::size_t n, std::size_t n_params, double sum_y2) {
  const double floor = 1e-20 * std::max(1.0, sum_y2);
  const double dn = static_cast<double>(n);
  return dn * std::log(std::max(rss, floor) / dn) + static_cast<double>(n_params) * std::log(dn);
}

inline bool is_constant_column(const Eigen::VectorXd& c) {
  if (c.size() == 0) return true;
  return (c.array() == c(0)).all();
}

namespace detail {

/// Least squares with intercept over the given columns; nullopt when the
/// augmented design is rank deficient.
inline std::optional<LinearModel> try_fit(const DesignMatrix& d, const std::vector<std::size_t>& cols) {
  const Eigen::Index n = d.x.rows();
  const Eigen::Index p = static_cast<Eigen::Index>(cols.size());
  if (n < p + 1) return std::nullopt;
  Eigen::MatrixXd a(n, p + 1);
  a.col(0).setOnes();
  for (Eigen::Index k = 0; k < p; ++k) a.col(k + 1) = d.x.col(static_cast<Eigen::Index>(cols[static_cast<std::size_t>(k)]));
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < p + 1) return std::nullopt;
  const Eigen::VectorXd beta = qr.solve(d.y);
  const Eigen::VectorXd resid = d.y - a * beta;

  LinearModel m;
  m.n = static_cast<std::size_t>(n);
  m.intercept = beta(0);
  for (Eigen::Index k = 0; k < p; ++k) {
    m.selected_features.push_back(d.names[cols[static_cast<std::size_t>(k)]]);
    m.coefficients.push_back(beta(k + 1));
  }
  m.rss = resid.squaredNorm();
  m.bic = bic_value(m.rss, m.n, static_cast<std::size_t>(p + 1), d.y.squaredNorm());
  return m;
}

}  // namespace detail

/// Ordinary least squares with intercept on every non-constant column of d.
/// Constant columns are dropped (they are aliased with the intercept).
inline LinearModel fit_ols(const DesignMatrix& d) {
  d.validate();
  require(d.rows() >= 1, Errc::EmptyDesign, "OLS on an empty design");
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < d.cols(); ++j)
    if (!is_constant_column(d.x.col(static_cast<Eigen::Index>(j)))) cols.push_back(j);
  auto m = detail::try_fit(d, cols);
  if (!m)
    fail(Errc::RankDeficient, "design with " + std::to_string(cols.size()) + " features and " +
                                  std::to_string(d.rows()) + " rows is not of full column rank");
  return *m;
}

}  // namespace agb::regression
