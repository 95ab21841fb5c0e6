#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "agbmap/parallel.hpp"
#include "agbmap/random.hpp"
#include "agbmap/regression/design.hpp"

namespace agb::regression {

struct ForestParams {
  int n_trees = 500;
  int mtry = 0;  ///< 0 selects ceil(p/3)
  int min_leaf = 5;

  int resolved_mtry(std::size_t p) const {
    const int m = mtry > 0 ? mtry : static_cast<int>((p + 2) / 3);
    return std::clamp(m, 1, static_cast<int>(std::max<std::size_t>(p, 1)));
  }
};

/// Flat node. Leaves have feature == -1. A continuous split sends
/// x <= threshold left; a categorical split sends codes whose bit is set in
/// left_mask left.
struct TreeNode {
  int feature = -1;
  bool categorical = false;
  double threshold = 0.0;
  std::uint64_t left_mask = 0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  template <class Row>
  double predict(const Row& row) const {
    int k = 0;
    while (nodes[static_cast<std::size_t>(k)].feature >= 0) {
      const auto& nd = nodes[static_cast<std::size_t>(k)];
      const double v = row(nd.feature);
      bool go_left;
      if (nd.categorical) {
        const auto code = static_cast<int>(v);
        go_left = code >= 0 && code < 64 && ((nd.left_mask >> code) & 1u);
      } else {
        go_left = v <= nd.threshold;
      }
      k = go_left ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(k)].value;
  }

  bool uses_feature(int j) const {
    return std::any_of(nodes.begin(), nodes.end(), [j](const TreeNode& n) { return n.feature == j; });
  }
};

struct Forest {
  std::vector<std::string> names;
  std::vector<FeatureKind> kinds;
  ForestParams params;
  std::uint64_t seed = 0;
  std::vector<RegressionTree> trees;
  double oob_error = std::numeric_limits<double>::quiet_NaN();  ///< OOB mean squared error
  Eigen::VectorXd oob_predictions;  ///< NaN for rows never out of bag

  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(row);
    return s / static_cast<double>(trees.size());
  }

  /// Columns of d are matched to the training features by name.
  Eigen::VectorXd predict(const DesignMatrix& d) const {
    Eigen::MatrixXd x(d.x.rows(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
      const auto c = d.find(names[j]);
      if (c < 0) fail(Errc::InvalidArgument, "design lacks forest feature '" + names[j] + "'");
      x.col(static_cast<Eigen::Index>(j)) = d.x.col(c);
    }
    return predict(x);
  }

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd out(x.rows());
    parallel_for(static_cast<std::size_t>(x.rows()), [&](std::size_t i) {
      out(static_cast<Eigen::Index>(i)) = predict_row(x.row(static_cast<Eigen::Index>(i)));
    });
    return out;
  }

  double oob_rmse() const { return std::sqrt(oob_error); }
};

namespace detail {

inline constexpr std::uint64_t kTreeStream = 0xF0;

/// Bootstrap draw for tree t; regenerable from the forest seed alone.
inline std::vector<std::size_t> bootstrap_rows(std::size_t n, std::uint64_t seed, std::size_t t) {
  auto rng = make_rng(seed, kTreeStream, t);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = static_cast<std::size_t>(uniform_index(rng, n));
  return rows;
}

inline std::vector<std::size_t> out_of_bag(std::size_t n, const std::vector<std::size_t>& in_bag) {
  std::vector<char> seen(n, 0);
  for (auto r : in_bag) seen[r] = 1;
  std::vector<std::size_t> oob;
  for (std::size_t i = 0; i < n; ++i)
    if (!seen[i]) oob.push_back(i);
  return oob;
}

struct Split {
  int feature = -1;
  bool categorical = false;
  double threshold = 0.0;
  std::uint64_t mask = 0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const DesignMatrix& d, const ForestParams& p, Rng& rng)
      : d_(d), min_leaf_(static_cast<std::size_t>(std::max(1, p.min_leaf))),
        mtry_(p.resolved_mtry(d.cols())), rng_(rng) {}

  RegressionTree build(std::vector<std::size_t> rows) {
    RegressionTree tree;
    grow(tree, rows, 0, rows.size());
    return tree;
  }

 private:
  double y(std::size_t i) const { return d_.y(static_cast<Eigen::Index>(i)); }
  double x(std::size_t i, int j) const { return d_.x(static_cast<Eigen::Index>(i), j); }

  int grow(RegressionTree& tree, std::vector<std::size_t>& rows, std::size_t lo, std::size_t hi) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    double sum = 0.0;
    double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
    for (std::size_t k = lo; k < hi; ++k) {
      sum += y(rows[k]);
      ymin = std::min(ymin, y(rows[k]));
      ymax = std::max(ymax, y(rows[k]));
    }
    const std::size_t n = hi - lo;
    tree.nodes[static_cast<std::size_t>(id)].value = std::clamp(sum / static_cast<double>(n), ymin, ymax);
    if (n < 2 * min_leaf_ || ymin == ymax) return id;

    const Split s = best_split(rows, lo, hi);
    if (s.feature < 0) return id;
    auto goes_left = [&](std::size_t r) {
      const double v = x(r, s.feature);
      return s.categorical ? ((s.mask >> static_cast<int>(v)) & 1u) != 0 : v <= s.threshold;
    };
    const auto mid = static_cast<std::size_t>(
        std::stable_partition(rows.begin() + static_cast<std::ptrdiff_t>(lo), rows.begin() + static_cast<std::ptrdiff_t>(hi),
                              goes_left) -
        rows.begin());
    if (mid == lo || mid == hi) return id;

    const int l = grow(tree, rows, lo, mid);
    const int r = grow(tree, rows, mid, hi);
    auto& nd = tree.nodes[static_cast<std::size_t>(id)];
    nd.feature = s.feature;
    nd.categorical = s.categorical;
    nd.threshold = s.threshold;
    nd.left_mask = s.mask;
    nd.left = l;
    nd.right = r;
    return id;
  }

  Split best_split(const std::vector<std::size_t>& rows, std::size_t lo, std::size_t hi) {
    const std::size_t p = d_.cols();
    std::vector<int> features(p);
    std::iota(features.begin(), features.end(), 0);
    for (int k = 0; k < mtry_; ++k) {
      const auto j = k + static_cast<int>(uniform_index(rng_, p - static_cast<std::size_t>(k)));
      std::swap(features[static_cast<std::size_t>(k)], features[static_cast<std::size_t>(j)]);
    }
    std::sort(features.begin(), features.begin() + mtry_);

    const std::size_t n = hi - lo;
    double total = 0.0;
    for (std::size_t k = lo; k < hi; ++k) total += y(rows[k]);
    const double base = total * total / static_cast<double>(n);

    Split best;
    for (int m = 0; m < mtry_; ++m) {
      const int j = features[static_cast<std::size_t>(m)];
      if (d_.kind(static_cast<std::size_t>(j)) == FeatureKind::Categorical)
        categorical_split(rows, lo, hi, j, base, best);
      else
        continuous_split(rows, lo, hi, j, base, best);
    }
    return best;
  }

  // Gain is the reduction of the node sum of squares: sL^2/nL + sR^2/nR - s^2/n.
  void continuous_split(const std::vector<std::size_t>& rows, std::size_t lo, std::size_t hi, int j, double base,
                        Split& best) {
    scratch_.assign(rows.begin() + static_cast<std::ptrdiff_t>(lo), rows.begin() + static_cast<std::ptrdiff_t>(hi));
    std::sort(scratch_.begin(), scratch_.end(), [&](std::size_t a, std::size_t b) {
      const double xa = x(a, j), xb = x(b, j);
      return xa < xb || (xa == xb && a < b);
    });
    const std::size_t n = scratch_.size();
    double total = 0.0;
    for (auto r : scratch_) total += y(r);
    double left = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      left += y(scratch_[k]);
      const std::size_t nl = k + 1, nr = n - nl;
      if (nl < min_leaf_) continue;
      if (nr < min_leaf_) break;
      const double a = x(scratch_[k], j), b = x(scratch_[k + 1], j);
      if (a == b) continue;
      const double right = total - left;
      const double gain = left * left / static_cast<double>(nl) + right * right / static_cast<double>(nr) - base;
      if (gain > best.gain * (1 + 1e-12) + 1e-12 * std::abs(base)) {
        best.feature = j;
        best.categorical = false;
        best.threshold = a + (b - a) / 2;
        if (!(best.threshold < b)) best.threshold = a;
        best.gain = gain;
      }
    }
  }

  void categorical_split(const std::vector<std::size_t>& rows, std::size_t lo, std::size_t hi, int j, double base,
                         Split& best) {
    std::array<double, 64> sum{};
    std::array<std::size_t, 64> count{};
    for (std::size_t k = lo; k < hi; ++k) {
      const auto c = static_cast<std::size_t>(x(rows[k], j));
      sum[c] += y(rows[k]);
      ++count[c];
    }
    std::vector<int> cats;
    for (int c = 0; c < 64; ++c)
      if (count[static_cast<std::size_t>(c)] > 0) cats.push_back(c);
    if (cats.size() < 2) return;
    std::sort(cats.begin(), cats.end(), [&](int a, int b) {
      const double ma = sum[static_cast<std::size_t>(a)] / static_cast<double>(count[static_cast<std::size_t>(a)]);
      const double mb = sum[static_cast<std::size_t>(b)] / static_cast<double>(count[static_cast<std::size_t>(b)]);
      return ma < mb || (ma == mb && a < b);
    });
    const std::size_t n = hi - lo;
    double total = 0.0;
    for (int c : cats) total += sum[static_cast<std::size_t>(c)];
    double left = 0.0;
    std::size_t nl = 0;
    std::uint64_t mask = 0;
    for (std::size_t k = 0; k + 1 < cats.size(); ++k) {
      const auto c = static_cast<std::size_t>(cats[k]);
      left += sum[c];
      nl += count[c];
      mask |= std::uint64_t{1} << c;
      const std::size_t nr = n - nl;
      if (nl < min_leaf_ || nr < min_leaf_) continue;
      const double right = total - left;
      const double gain = left * left / static_cast<double>(nl) + right * right / static_cast<double>(nr) - base;
      if (gain > best.gain * (1 + 1e-12) + 1e-12 * std::abs(base)) {
        best.feature = j;
        best.categorical = true;
        best.mask = mask;
        best.gain = gain;
      }
    }
  }

  const DesignMatrix& d_;
  std::size_t min_leaf_;
  int mtry_;
  Rng& rng_;
  std::vector<std::size_t> scratch_;
};

inline RegressionTree grow_tree(const DesignMatrix& d, const ForestParams& params, std::uint64_t seed, std::size_t t) {
  auto rows = bootstrap_rows(d.rows(), seed, t);
  auto rng = make_rng(seed, kTreeStream + 1, t);
  TreeBuilder builder(d, params, rng);
  return builder.build(std::move(rows));
}

}  // namespace detail

/// Bagged CART regression forest. Tree t is grown from a bootstrap sample and
/// feature draws seeded by (seed, t) only, so the result does not depend on
/// how trees are spread over threads.
inline Forest fit_random_forest(const DesignMatrix& d, const ForestParams& params = {}, std::uint64_t seed = 0) {
  d.validate();
  require(d.rows() >= 1 && d.cols() >= 1, Errc::EmptyDesign, "random forest on an empty design");
  require(params.n_trees >= 1, Errc::InvalidArgument, "n_trees must be >= 1");
  require(params.min_leaf >= 1, Errc::InvalidArgument, "min_leaf must be >= 1");

  Forest f;
  f.names = d.names;
  f.kinds = d.kinds;
  f.params = params;
  f.params.mtry = params.resolved_mtry(d.cols());
  f.seed = seed;
  f.trees.resize(static_cast<std::size_t>(params.n_trees));
  parallel_for(f.trees.size(), [&](std::size_t t) { f.trees[t] = detail::grow_tree(d, f.params, seed, t); });

  const std::size_t n = d.rows();
  std::vector<double> sum(n, 0.0);
  std::vector<int> cnt(n, 0);
  for (std::size_t t = 0; t < f.trees.size(); ++t) {
    for (auto i : detail::out_of_bag(n, detail::bootstrap_rows(n, seed, t))) {
      sum[i] += f.trees[t].predict(d.x.row(static_cast<Eigen::Index>(i)));
      ++cnt[i];
    }
  }
  f.oob_predictions = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), std::numeric_limits<double>::quiet_NaN());
  double se = 0.0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (cnt[i] == 0) continue;
    const double p = sum[i] / cnt[i];
    f.oob_predictions(static_cast<Eigen::Index>(i)) = p;
    se += (p - d.y(static_cast<Eigen::Index>(i))) * (p - d.y(static_cast<Eigen::Index>(i)));
    ++m;
  }
  if (m > 0) f.oob_error = se / static_cast<double>(m);
  return f;
}

}  // namespace agb::regression
