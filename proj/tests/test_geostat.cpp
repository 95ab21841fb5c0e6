#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "agbmap/geostat/kriging.hpp"
#include "agbmap/geostat/samples.hpp"
#include "agbmap/geostat/variogram.hpp"
#include "agbmap/random.hpp"
#include "oracles.hpp"

using namespace agb;
using namespace agb::geostat;

namespace {

SampleSet random_samples(std::size_t n, std::uint64_t seed, double extent = 1000.0) {
  auto rng = make_rng(seed);
  SampleSet s;
  for (std::size_t i = 0; i < n; ++i)
    s.add({uniform(rng, 0, extent), uniform(rng, 0, extent)}, normal(rng, 50, 10));
  return s;
}

}  // namespace

TEST(Variogram, ModelShape) {
  const VariogramModel m{2.0, 8.0, 300.0};
  EXPECT_EQ(m.gamma(0.0), 0.0);
  EXPECT_NEAR(m.gamma(1e-9), 2.0, 1e-6);
  EXPECT_NEAR(m.gamma(300.0), 2.0 + 8.0 * (1 - std::exp(-3.0)), 1e-12);
  EXPECT_EQ(m.sill(), 10.0);
  EXPECT_THROW((VariogramModel{-1, 1, 1}.validate()), Error);
  EXPECT_THROW((VariogramModel{0, 1, 0}.validate()), Error);
}

TEST(Variogram, EmpiricalMatchesBruteForce) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto s = random_samples(150 + 70 * seed, seed);
    s.add(s.locations[0], 3.0);  // a zero-separation pair
    const double w = 37.5, maxl = 600.0;
    const auto ev = empirical_variogram(s, w, maxl);
    const auto bb = oracle::brute_variogram(s, w, maxl);
    std::size_t k = 0;
    for (const auto& b : bb) {
      if (b.pairs == 0) continue;
      ASSERT_LT(k, ev.bins.size());
      EXPECT_EQ(ev.bins[k].pairs, b.pairs);
      EXPECT_NEAR(ev.bins[k].gamma, b.sq_sum / (2.0 * b.pairs), 1e-10 * (1 + ev.bins[k].gamma));
      EXPECT_NEAR(ev.bins[k].lag, b.lag_sum / b.pairs, 1e-10 * (1 + ev.bins[k].lag));
      ++k;
    }
    EXPECT_EQ(k, ev.bins.size());
  }
}

TEST(Variogram, EmpiricalIndependentOfThreads) {
  const auto s = random_samples(400, 6);
  set_thread_limit(1);
  const auto a = empirical_variogram(s);
  set_thread_limit(4);
  const auto b = empirical_variogram(s);
  set_thread_limit(0);
  ASSERT_EQ(a.bins.size(), b.bins.size());
  for (std::size_t i = 0; i < a.bins.size(); ++i) {
    EXPECT_EQ(a.bins[i].gamma, b.bins[i].gamma);
    EXPECT_EQ(a.bins[i].lag, b.bins[i].lag);
  }
}

TEST(Variogram, FitRecoversExactModel) {
  const VariogramModel truth{5.0, 20.0, 400.0};
  EmpiricalVariogram ev;
  for (int i = 1; i <= 30; ++i) {
    const double h = 25.0 * i;
    ev.bins.push_back({h, oracle::exp_gamma(truth, h), static_cast<std::size_t>(100 + i)});
  }
  const auto m = fit_exponential(ev);
  EXPECT_NEAR(m.nugget, 5.0, 1e-3);
  EXPECT_NEAR(m.psill, 20.0, 1e-3);
  EXPECT_NEAR(m.range, 400.0, 0.1);
}

TEST(Variogram, FitFailsOnTooFewBins) {
  EmpiricalVariogram ev;
  ev.bins = {{10, 1, 5}, {20, 2, 5}};
  EXPECT_THROW(fit_exponential(ev), Error);
}

TEST(Variogram, CsvHasModelColumn) {
  EmpiricalVariogram ev;
  ev.bins = {{10, 1, 5}, {20, 2, 7}};
  const VariogramModel m{0.5, 2, 50};
  std::ostringstream out;
  write_variogram_csv(out, ev, &m);
  std::istringstream in(out.str());
  const auto t = text::CsvTable::parse(in);
  EXPECT_EQ(t.size(), 2u);
  EXPECT_NEAR(t.number(1, "model"), m.gamma(20), 1e-12);
}

TEST(Kriging, MatchesDenseSolve) {
  const VariogramModel m{1.0, 9.0, 250.0};
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = random_samples(5 + 19 * seed, seed);
    const OrdinaryKriger k(s, m, s.size());
    auto rng = make_rng(seed, 2);
    for (int t = 0; t < 5; ++t) {
      const Point2 q{uniform(rng, -100, 1100), uniform(rng, -100, 1100)};
      const auto got = k.predict(q);
      const auto want = oracle::dense_ok(s, m, q);
      EXPECT_NEAR(got.estimate, want.estimate, 1e-6);
      EXPECT_NEAR(got.variance, want.variance, 1e-6);
      double sw = 0;
      for (std::size_t i = 0; i < got.weights.size(); ++i) {
        sw += got.weights[i];
        EXPECT_NEAR(got.weights[i], want.weights(static_cast<Eigen::Index>(got.neighbors[i])), 1e-6);
      }
      EXPECT_NEAR(sw, 1.0, 1e-9);
    }
  }
}

TEST(Kriging, ExactAtSamplesWithoutNugget) {
  const auto s = random_samples(60, 3);
  const VariogramModel m{0.0, 100.0, 300.0};
  const OrdinaryKriger k(s, m, 16);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto r = k.predict(s.locations[i]);
    EXPECT_NEAR(r.estimate, s.values[i], 1e-8);
    EXPECT_NEAR(r.variance, 0.0, 1e-8);
  }
}

TEST(Kriging, FarTargetTendsToMeanWithSillVariance) {
  const auto s = random_samples(40, 4);
  const VariogramModel m{0.0, 100.0, 1e-3};
  const auto r = ordinary_krige(s, m, {1e6, 1e6}, s.size());
  double mean = 0;
  for (double v : s.values) mean += v;
  // all covariances vanish: equal weights, variance sill + sill/n
  EXPECT_NEAR(r.estimate, mean / s.size(), 1e-9);
  EXPECT_NEAR(r.variance, 100.0 * (1.0 + 1.0 / s.size()), 1e-9);
}

TEST(Kriging, DuplicateLocationsAreSingular) {
  SampleSet s;
  s.add({0, 0}, 1);
  s.add({0, 0}, 2);
  s.add({10, 0}, 3);
  try {
    ordinary_krige(s, {0, 1, 100}, {5, 5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SingularSystem);
  }
  SampleSet empty;
  EXPECT_THROW(OrdinaryKriger(empty, {0, 1, 100}).predict({0, 0}), Error);
}

TEST(Samples, DeduplicateAveragesGroups) {
  SampleSet s;
  s.add({5, 5}, 1);
  s.add({1, 1}, 10);
  s.add({5, 5 + 1e-9}, 3);
  s.add({1, 1}, 20);
  s.add({9, 9}, 7);
  const auto d = deduplicate(s);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.locations[0].x, 5.0);
  EXPECT_EQ(d.values[0], 2.0);
  EXPECT_EQ(d.values[1], 15.0);
  EXPECT_EQ(d.values[2], 7.0);
}

TEST(RegressionKriging, TrendPlusKrigedResidualAndNodata) {
  const raster::GridGeometry g{4, 3, 0, 0, 100};
  raster::Grid trend(g, -9999.0, 50.0);
  trend.at(1, 2) = -9999.0;
  SampleSet res;
  res.add(g.cell_center(0, 0), 5.0);
  res.add(g.cell_center(2, 3), -5.0);
  res.add(g.cell_center(1, 1), 0.0);
  const VariogramModel m{0.0, 25.0, 200.0};
  const auto rk = regression_krige(trend, res, m);
  EXPECT_NEAR(rk.final.at(0, 0), 55.0, 1e-9);
  EXPECT_NEAR(rk.final.at(2, 3), 45.0, 1e-9);
  EXPECT_FALSE(rk.final.is_valid(1, 2));
  EXPECT_FALSE(rk.variance.is_valid(1, 2));
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c)
      if (rk.final.is_valid(r, c)) {
        const auto k = ordinary_krige(res, m, g.cell_center(r, c));
        EXPECT_NEAR(rk.final.at(r, c), 50.0 + k.estimate, 1e-12);
        EXPECT_NEAR(rk.variance.at(r, c), k.variance, 1e-12);
      }
}

TEST(RegressionKriging, ZeroResidualReturnsTrend) {
  const raster::GridGeometry g{5, 5, 0, 0, 100};
  raster::Grid trend(g, -9999.0, 0.0);
  for (std::size_t i = 0; i < trend.size(); ++i) trend.values()[i] = static_cast<double>(i);
  SampleSet res;
  auto rng = make_rng(1);
  for (int i = 0; i < 20; ++i) res.add({uniform(rng, 0, 500), uniform(rng, 0, 500)}, 0.0);
  const auto rk = regression_krige(trend, res, {1.0, 10.0, 150.0});
  for (std::size_t i = 0; i < trend.size(); ++i) EXPECT_NEAR(rk.final.values()[i], trend.values()[i], 1e-12);
}
