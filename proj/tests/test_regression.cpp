#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "agbmap/random.hpp"
#include "agbmap/regression/cv.hpp"
#include "agbmap/regression/forest.hpp"
#include "agbmap/regression/importance.hpp"
#include "agbmap/regression/linear.hpp"
#include "agbmap/regression/persist.hpp"
#include "agbmap/regression/stepwise.hpp"
#include "oracles.hpp"

using namespace agb;
using namespace agb::regression;

namespace {

DesignMatrix linear_design(std::size_t n, std::uint64_t seed, double noise = 0.5) {
  auto rng = make_rng(seed);
  DesignMatrix d;
  d.names = {"a", "b", "c"};
  d.x.resize(static_cast<Eigen::Index>(n), 3);
  d.y.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    for (int j = 0; j < 3; ++j) d.x(i, j) = normal(rng);
    d.y(i) = 2.0 + 3.0 * d.x(i, 0) - 1.5 * d.x(i, 1) + noise * normal(rng);
  }
  return d;
}

}  // namespace

TEST(Ols, MatchesNormalEquations) {
  const auto d = linear_design(200, 1);
  const auto m = fit_ols(d);
  Eigen::MatrixXd a(200, 4);
  a.col(0).setOnes();
  a.rightCols(3) = d.x;
  const Eigen::VectorXd beta = (a.transpose() * a).ldlt().solve(a.transpose() * d.y);
  EXPECT_NEAR(m.intercept, beta(0), 1e-10);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(m.coefficients[j], beta(j + 1), 1e-10);
  EXPECT_NEAR(m.rss, (d.y - a * beta).squaredNorm(), 1e-8);
  EXPECT_NEAR(m.bic, oracle::subset_bic(d, {0, 1, 2}), 1e-8);
  EXPECT_LT((m.predict(d) - a * beta).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Ols, DropsConstantAndRejectsAliased) {
  auto d = linear_design(50, 2);
  d.x.col(2).setConstant(4.0);
  const auto m = fit_ols(d);
  EXPECT_EQ(m.selected_features, (std::vector<std::string>{"a", "b"}));
  d.x.col(2) = 2.0 * d.x.col(0) - d.x.col(1);
  try {
    fit_ols(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::RankDeficient);
  }
}

TEST(Ols, PredictByNameIgnoresColumnOrder) {
  const auto d = linear_design(60, 3);
  const auto m = fit_ols(d);
  DesignMatrix r;
  r.names = {"c", "b", "a"};
  r.x = d.x.rowwise().reverse();
  EXPECT_LT((m.predict(r) - m.predict(d)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(OneHot, IndicatorsAndPrediction) {
  DesignMatrix d;
  d.names = {"x", "g"};
  d.kinds = {FeatureKind::Continuous, FeatureKind::Categorical};
  d.x.resize(6, 2);
  d.x << 1, 2, 2, 0, 3, 5, 4, 2, 5, 0, 6, 5;
  d.y.resize(6);
  for (int i = 0; i < 6; ++i) d.y(i) = d.x(i, 0) + (d.x(i, 1) == 2 ? 10 : d.x(i, 1) == 5 ? 20 : 0);
  const auto h = one_hot(d);
  EXPECT_EQ(h.names, (std::vector<std::string>{"x", "g=2", "g=5"}));
  const auto m = fit_ols(h);
  const Eigen::VectorXd p = m.predict(d);
  EXPECT_LT((p - d.y).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Bic, FloorKeepsExactFitsFinite) {
  EXPECT_TRUE(std::isfinite(bic_value(0.0, 10, 2, 100.0)));
  EXPECT_LT(bic_value(0.0, 10, 2, 100.0), bic_value(0.0, 10, 3, 100.0));
}

TEST(Stepwise, AgreesWithAllSubsets) {
  int agree = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto c = oracle::stepwise_case(s);
    const auto got = stepwise_bic(c.design).model;
    const auto want = oracle::all_subsets_bic(c.design);
    std::vector<std::string> want_names;
    for (auto j : want.cols) want_names.push_back(c.design.names[j]);
    const bool same = got.selected_features == want_names && std::abs(got.bic - want.bic) < 1e-8 * std::abs(want.bic);
    agree += same;
    EXPECT_TRUE(same) << "case " << s;
  }
  EXPECT_EQ(agree, 100);
}

TEST(Stepwise, DropsNoiseKeepsSignal) {
  const auto d = linear_design(300, 4, 0.3);
  const auto r = stepwise_bic(d);
  EXPECT_EQ(r.model.selected_features, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(r.full_model.selected_features.size(), 3u);
  EXPECT_GE(r.steps, 1);
}

TEST(Stepwise, DeAliasesCollinearColumns) {
  auto d = linear_design(100, 5);
  d.names.push_back("a2");
  d.x.conservativeResize(Eigen::NoChange, 4);
  d.x.col(3) = 2.0 * d.x.col(0);
  const auto r = stepwise_bic(d);
  EXPECT_EQ(std::count(r.full_model.selected_features.begin(), r.full_model.selected_features.end(), "a2"), 0);
  EXPECT_NO_THROW(r.model.predict(d));
}

TEST(Cv, FoldsPartitionRows) {
  const auto fold = fold_assignment(103, 10, 7);
  std::vector<int> size(10, 0);
  for (int f : fold) {
    ASSERT_GE(f, 0);
    ASSERT_LT(f, 10);
    ++size[f];
  }
  for (int s : size) {
    EXPECT_GE(s, 10);
    EXPECT_LE(s, 11);
  }
  EXPECT_EQ(fold, fold_assignment(103, 10, 7));
  EXPECT_NE(fold, fold_assignment(103, 10, 8));
}

TEST(Cv, OutOfFoldPredictionsNeverSeeTheirRow) {
  // a mean-only fitter predicts each row with the mean of the other folds
  DesignMatrix d;
  d.names = {"x"};
  d.x = Eigen::MatrixXd::Zero(20, 1);
  d.y = Eigen::VectorXd::LinSpaced(20, 0, 19);
  Fitter f = [](const DesignMatrix& train) -> Predictor {
    const double m = train.y.mean();
    return [m](const DesignMatrix& t) { return Eigen::VectorXd::Constant(t.x.rows(), m); };
  };
  const auto cv = kfold_cv(d, f, 5, 1);
  const auto fold = fold_assignment(20, 5, 1);
  for (int i = 0; i < 20; ++i) {
    double s = 0;
    int c = 0;
    for (int j = 0; j < 20; ++j)
      if (fold[j] != fold[i]) s += j, ++c;
    EXPECT_NEAR(cv.predictions(i), s / c, 1e-12);
  }
  EXPECT_THROW(kfold_cv(d, f, 1), Error);
  EXPECT_THROW(kfold_cv(d, f, 21), Error);
}

TEST(Cv, ScoresOfPerfectPrediction) {
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 4;
  EXPECT_EQ(r_squared(y, y), 1.0);
  EXPECT_EQ(rmse(y, y), 0.0);
  Eigen::VectorXd off = y.array() + 1.0;
  EXPECT_EQ(rmse(y, off), 1.0);
}

TEST(Forest, FitsStepFunctionAndIsDeterministic) {
  auto rng = make_rng(8);
  DesignMatrix d;
  d.names = {"x", "z"};
  d.x.resize(300, 2);
  d.y.resize(300);
  for (int i = 0; i < 300; ++i) {
    d.x(i, 0) = uniform(rng, 0, 10);
    d.x(i, 1) = uniform(rng, 0, 10);
    d.y(i) = d.x(i, 0) < 5 ? 10.0 : 50.0;
  }
  ForestParams p;
  p.n_trees = 100;
  const auto f = fit_random_forest(d, p, 3);
  EXPECT_LT(f.oob_rmse(), 3.0);
  Eigen::MatrixXd q(2, 2);
  q << 2, 5, 8, 5;
  const auto pred = f.predict(q);
  EXPECT_NEAR(pred(0), 10.0, 1.0);
  EXPECT_NEAR(pred(1), 50.0, 1.0);

  set_thread_limit(1);
  const auto g = fit_random_forest(d, p, 3);
  set_thread_limit(0);
  EXPECT_EQ(g.predict(d.x), f.predict(d.x));
  EXPECT_EQ(g.oob_error, f.oob_error);
  const auto h = fit_random_forest(d, p, 4);
  EXPECT_NE(h.predict(d.x), f.predict(d.x));
}

TEST(Forest, PredictionsStayWithinTargetRange) {
  const auto d = linear_design(150, 9);
  ForestParams p;
  p.n_trees = 50;
  const auto f = fit_random_forest(d, p, 1);
  auto rng = make_rng(99);
  Eigen::MatrixXd q(200, 3);
  for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = normal(rng, 0, 5);
  const auto pr = f.predict(q);
  EXPECT_GE(pr.minCoeff(), d.y.minCoeff());
  EXPECT_LE(pr.maxCoeff(), d.y.maxCoeff());
}

TEST(Forest, CategoricalSplits) {
  DesignMatrix d;
  d.names = {"g"};
  d.kinds = {FeatureKind::Categorical};
  d.x.resize(200, 1);
  d.y.resize(200);
  for (int i = 0; i < 200; ++i) {
    d.x(i, 0) = i % 4;
    d.y(i) = (i % 4 == 1 || i % 4 == 3) ? 100.0 : 0.0;
  }
  ForestParams p;
  p.n_trees = 20;
  p.min_leaf = 1;
  const auto f = fit_random_forest(d, p, 1);
  Eigen::MatrixXd q(4, 1);
  q << 0, 1, 2, 3;
  const auto pr = f.predict(q);
  EXPECT_NEAR(pr(0), 0.0, 1e-9);
  EXPECT_NEAR(pr(1), 100.0, 1e-9);
  EXPECT_NEAR(pr(2), 0.0, 1e-9);
  EXPECT_NEAR(pr(3), 100.0, 1e-9);
}

TEST(Importance, SignalOutranksNoise) {
  const auto d = linear_design(200, 10);
  ForestParams p;
  p.n_trees = 100;
  const auto imp = rf_importance(d, p, 10, 5);
  ASSERT_EQ(imp.size(), 3u);
  EXPECT_EQ(imp[0].per_repetition.size(), 10u);
  EXPECT_GT(imp[0].mean, imp[1].mean);
  EXPECT_GT(imp[1].mean, imp[2].mean);
  EXPECT_GT(imp[0].sd, 0.0);
  for (std::size_t r = 0; r < 10; ++r) EXPECT_GT(imp[1].per_repetition[r], imp[2].per_repetition[r]);
}

TEST(Persist, LinearModelRoundTripsBitExact) {
  const auto m = fit_ols(linear_design(80, 11));
  std::stringstream ss;
  save_model(ss, Model(m));
  const auto back = std::get<LinearModel>(load_model(ss));
  EXPECT_EQ(back.intercept, m.intercept);
  EXPECT_EQ(back.coefficients, m.coefficients);
  EXPECT_EQ(back.selected_features, m.selected_features);
  EXPECT_EQ(back.bic, m.bic);
}

TEST(Persist, ForestRoundTripsBitExact) {
  const auto d = linear_design(100, 12);
  ForestParams p;
  p.n_trees = 10;
  const auto f = fit_random_forest(d, p, 2);
  std::stringstream ss;
  save_model(ss, Model(f));
  const std::string first = ss.str();
  const auto back = std::get<Forest>(load_model(ss));
  EXPECT_EQ(back.predict(d.x), f.predict(d.x));
  std::stringstream again;
  save_model(again, Model(back));
  EXPECT_EQ(again.str(), first);
}

TEST(Persist, RejectsCorruptInput) {
  std::istringstream bad("agbmap-model 1\nkind nonsense\n");
  EXPECT_THROW(load_model(bad), Error);
  std::istringstream wrong("other 1\n");
  EXPECT_THROW(load_model(wrong), Error);
}
