#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "agbmap/error.hpp"

namespace agb::regression {

enum class FeatureKind { Continuous, Categorical };

/// n samples by p named features plus the regression target. Categorical
/// features hold non-negative integer class codes.
struct DesignMatrix {
  std::vector<std::string> names;
  std::vector<FeatureKind> kinds;
  Eigen::MatrixXd x;
  Eigen::VectorXd y;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(x.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(x.cols()); }

  FeatureKind kind(std::size_t j) const { return kinds.empty() ? FeatureKind::Continuous : kinds.at(j); }

  std::ptrdiff_t find(const std::string& name) const {
    for (std::size_t j = 0; j < names.size(); ++j)
      if (names[j] == name) return static_cast<std::ptrdiff_t>(j);
    return -1;
  }

  void validate() const {
    require(names.size() == cols(), Errc::InvalidArgument, "design names/columns mismatch");
    require(kinds.empty() || kinds.size() == cols(), Errc::InvalidArgument, "design kinds/columns mismatch");
    require(static_cast<std::size_t>(y.size()) == rows(), Errc::InvalidArgument, "design target length mismatch");
    require(x.allFinite() && y.allFinite(), Errc::InvalidArgument, "design contains non-finite values");
    for (std::size_t j = 0; j < cols(); ++j)
      if (kind(j) == FeatureKind::Categorical)
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
          const double v = x(i, static_cast<Eigen::Index>(j));
          require(v >= 0 && v < 64 && v == std::floor(v), Errc::InvalidArgument,
                  "categorical feature '" + names[j] + "' needs integer codes in [0, 64)");
        }
  }

  DesignMatrix subset_rows(std::span<const std::size_t> idx) const {
    DesignMatrix d;
    d.names = names;
    d.kinds = kinds;
    d.x.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
    d.y.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) {
      d.x.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(idx[r]));
      d.y(static_cast<Eigen::Index>(r)) = y(static_cast<Eigen::Index>(idx[r]));
    }
    return d;
  }

  DesignMatrix select_columns(std::span<const std::size_t> cols_idx) const {
    DesignMatrix d;
    d.y = y;
    d.x.resize(x.rows(), static_cast<Eigen::Index>(cols_idx.size()));
    for (std::size_t k = 0; k < cols_idx.size(); ++k) {
      d.names.push_back(names.at(cols_idx[k]));
      if (!kinds.empty()) d.kinds.push_back(kinds[cols_idx[k]]);
      d.x.col(static_cast<Eigen::Index>(k)) = x.col(static_cast<Eigen::Index>(cols_idx[k]));
    }
    return d;
  }
};

/// Expands categorical columns into 0/1 indicator columns named
/// "<feature>=<code>", dropping the lowest observed code as reference.
inline DesignMatrix one_hot(const DesignMatrix& d) {
  DesignMatrix out;
  out.y = d.y;
  std::vector<Eigen::VectorXd> cols;
  for (std::size_t j = 0; j < d.cols(); ++j) {
    const auto col = d.x.col(static_cast<Eigen::Index>(j));
    if (d.kind(j) == FeatureKind::Continuous) {
      out.names.push_back(d.names[j]);
      cols.emplace_back(col);
      continue;
    }
    std::map<int, int> levels;
    for (Eigen::Index i = 0; i < col.size(); ++i) levels[static_cast<int>(col(i))] = 0;
    bool first = true;
    for (const auto& [code, unused] : levels) {
      if (first) {
        first = false;
        continue;
      }
      out.names.push_back(d.names[j] + "=" + std::to_string(code));
      Eigen::VectorXd ind(col.size());
      for (Eigen::Index i = 0; i < col.size(); ++i) ind(i) = static_cast<int>(col(i)) == code ? 1.0 : 0.0;
      cols.push_back(std::move(ind));
    }
  }
  out.x.resize(d.x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.x.col(static_cast<Eigen::Index>(k)) = cols[k];
  out.kinds.assign(cols.size(), FeatureKind::Continuous);
  return out;
}

}  // namespace agb::regression
