#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "agbmap/random.hpp"
#include "agbmap/waveform/decompose.hpp"
#include "agbmap/waveform/filter.hpp"
#include "agbmap/waveform/io.hpp"
#include "agbmap/waveform/metrics.hpp"
#include "agbmap/waveform/process.hpp"
#include "agbmap/waveform/signal.hpp"

using namespace agb;
using namespace agb::waveform;

namespace {

struct Peak {
  double amp, center, sigma;
};

WaveformRecord synth(const std::vector<Peak>& peaks, double top = 130.0, double bin = 0.5, std::size_t n = 200,
                     double background = 10.0, double noise_sd = 0.0, std::uint64_t seed = 1) {
  WaveformRecord w;
  w.id = "w";
  w.bin_top_elev = top;
  w.bin_size = bin;
  w.intensities.resize(n);
  auto rng = make_rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = top - static_cast<double>(i) * bin;
    double v = background;
    for (const auto& p : peaks) v += p.amp * std::exp(-0.5 * std::pow((e - p.center) / p.sigma, 2));
    if (noise_sd > 0) v += noise_sd * normal(rng);
    w.intensities[i] = std::max(0.0, v);
  }
  w.srtm_elev = peaks.empty() ? top : peaks.back().center;
  return w;
}

SignalBounds bounds_with_snr(double snr) {
  SignalBounds b;
  b.noise = {10.0, 1.0, snr};
  b.begin_bin = 0;
  b.end_bin = 0;
  return b;
}

}  // namespace

TEST(Signal, BoundsBracketTheReturns) {
  const auto w = synth({{100, 110, 2}, {150, 80, 1}}, 130, 0.5, 200, 10, 1.0);
  const auto b = detect_signal_bounds(w);
  EXPECT_NEAR(b.noise.mean, 10.0, 0.5);
  EXPECT_NEAR(b.noise.sd, 1.0, 0.3);
  EXPECT_GT(b.begin_elev, 110.0 + 2 * 2);
  EXPECT_LT(b.begin_elev, 110.0 + 5 * 2);
  EXPECT_LT(b.end_elev, 80.0 - 2 * 1);
  EXPECT_GT(b.end_elev, 80.0 - 5 * 1);
  EXPECT_NEAR(b.noise.snr, (w.intensities[100] - b.noise.mean) / b.noise.sd, 1e-9);
}

TEST(Signal, FlatAndNoiselessCases) {
  WaveformRecord flat;
  flat.intensities.assign(50, 3.0);
  try {
    detect_signal_bounds(flat);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoSignal);
  }
  const auto clean = synth({{100, 80, 1}});
  try {
    detect_signal_bounds(clean);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegenerateNoise);
  }
  SignalOptions opt;
  opt.sd_floor = 0.1;
  const auto b = detect_signal_bounds(clean, opt);
  EXPECT_EQ(b.noise.sd, 0.1);
  EXPECT_EQ(b.noise.mean, 10.0);
}

TEST(Filter, EachRuleRejectsAlone) {
  const auto w = synth({{100, 110, 2}, {150, 80, 1}});
  const auto ok = bounds_with_snr(40.0);
  auto base = w;
  base.srtm_elev = 100.0;
  EXPECT_EQ(quality_filter(base, ok).reason, RejectReason::None);
  EXPECT_EQ(quality_filter(base, std::nullopt).reason, RejectReason::NoSignal);
  EXPECT_EQ(quality_filter(base, bounds_with_snr(14.99)).reason, RejectReason::SNR);
  EXPECT_EQ(quality_filter(base, bounds_with_snr(15.0)).reason, RejectReason::None);

  auto cloud = base;
  cloud.cloud_flag = 3;
  EXPECT_EQ(quality_filter(cloud, ok).reason, RejectReason::Cloud);
  auto sat = base;
  sat.sat_ndx = 2;
  EXPECT_EQ(quality_filter(sat, ok).reason, RejectReason::Saturated);
}

TEST(Filter, ElevationGapUsesEnergyCentroid) {
  auto w = synth({{100, 110, 2}, {150, 80, 1}});
  SignalOptions so;
  so.sd_floor = 0.5;
  const auto b = detect_signal_bounds(w, so);
  const double c = centroid_elevation(w, b);
  // centroid between the returns, weighted toward the stronger integrated one
  EXPECT_GT(c, 80.0);
  EXPECT_LT(c, 110.0);
  w.srtm_elev = c + 100.0;
  EXPECT_EQ(quality_filter(w, b).reason, RejectReason::None);
  w.srtm_elev = c + 100.5;
  EXPECT_EQ(quality_filter(w, b).reason, RejectReason::ElevationMismatch);
  w.srtm_elev = c - 100.5;
  EXPECT_EQ(quality_filter(w, b).reason, RejectReason::ElevationMismatch);
}

TEST(Filter, RulesCheckedInOrder) {
  auto w = synth({{100, 110, 2}});
  w.cloud_flag = 0;
  w.sat_ndx = 1;
  w.srtm_elev = 10000;
  EXPECT_EQ(quality_filter(w, bounds_with_snr(1.0)).reason, RejectReason::SNR);
  EXPECT_EQ(quality_filter(w, bounds_with_snr(50.0)).reason, RejectReason::Cloud);
  w.cloud_flag = 15;
  EXPECT_EQ(quality_filter(w, bounds_with_snr(50.0)).reason, RejectReason::Saturated);
}

TEST(Decompose, RecoversNoiselessMixture) {
  const std::vector<Peak> truth = {{80, 112, 2.5}, {50, 100, 2.0}, {150, 85, 1.0}};
  const auto w = synth(truth, 130, 0.5, 200, 10.0);
  NoiseStats ns{10.0, 0.01, 0.0};
  const auto d = decompose_gaussians(w, ns);
  ASSERT_EQ(d.components.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(d.components[k].center_elev, truth[k].center, 1e-3);
    EXPECT_NEAR(d.components[k].amplitude, truth[k].amp, 1e-2 * truth[k].amp);
    EXPECT_NEAR(d.components[k].sigma, truth[k].sigma, 1e-2 * truth[k].sigma);
  }
  EXPECT_LT(d.residual_rms, 1e-3);
  EXPECT_EQ(d.chosen, 3);
  for (std::size_t k = 1; k < d.components.size(); ++k)
    EXPECT_GT(d.components[k - 1].center_elev, d.components[k].center_elev);
}

TEST(Decompose, NoisyCentersWithinABin) {
  const std::vector<Peak> truth = {{100, 115, 2.5}, {150, 90, 1.0}};
  int ok = 0;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const auto w = synth(truth, 130, 0.5, 200, 20.0, 1.5, s);
    const auto b = detect_signal_bounds(w);
    const auto d = decompose_gaussians(w, b.noise);
    const auto top = d.components.front();
    const auto ground = identify_ground_peak(d.components);
    ok += std::abs(top.center_elev - 115) < 0.5 && std::abs(ground.center_elev - 90) < 0.5;
  }
  EXPECT_GE(ok, 19);
}

TEST(Metrics, GroundPeakRule) {
  std::vector<GaussianComponent> c = {{50, 120, 2}, {60, 100, 2}, {40, 95, 1}};
  EXPECT_EQ(identify_ground_peak(c).center_elev, 100.0);
  c[2].amplitude = 70;
  EXPECT_EQ(identify_ground_peak(c).center_elev, 95.0);
  c[2].amplitude = 60;
  EXPECT_EQ(identify_ground_peak(c).center_elev, 95.0);
  EXPECT_EQ(identify_ground_peak({{1, 5, 1}}).center_elev, 5.0);
}

TEST(Metrics, HeightsFromComponents) {
  const auto w = synth({{80, 120, 2.5}, {150, 100, 1.0}});
  SignalBounds b;
  b.noise = {10, 1, 50};
  b.begin_bin = 10;  // 125 m
  b.end_bin = 64;    // 98 m
  b.begin_elev = w.elevation(10);
  b.end_elev = w.elevation(64);
  DemPatch patch;
  patch.z.fill(50.0);
  const auto m = extract_metrics(w, b, {{80, 120, 2.5}, {150, 100, 1.0}}, patch);
  EXPECT_DOUBLE_EQ(m.tch, 20.0);
  EXPECT_DOUBLE_EQ(m.wext, 27.0);
  EXPECT_DOUBLE_EQ(m.lead, 5.0);
  EXPECT_DOUBLE_EQ(m.trail, 2.0);
  EXPECT_DOUBLE_EQ(m.ground_elev, 100.0);
  EXPECT_EQ(m.ti, 0.0);
  EXPECT_EQ(m.slope, 0.0);
  for (std::size_t q = 1; q < 9; ++q) EXPECT_GE(m.h[q], m.h[q - 1]);
  EXPECT_THROW(extract_metrics(w, b, {}, patch), Error);
}

TEST(Metrics, QuantilesOfUniformEnergyAreLinear) {
  WaveformRecord w;
  w.bin_size = 0.25;
  w.intensities.assign(60, 2.0);
  for (std::size_t i = 10; i <= 50; ++i) w.intensities[i] = 7.0;
  SignalBounds b;
  b.noise.mean = 2.0;
  b.begin_bin = 10;
  b.end_bin = 50;
  // trapezoid over equal interior values with full-height ends: linear in depth
  const auto h = energy_quantile_depths(w, b);
  for (std::size_t q = 0; q < 9; ++q) EXPECT_NEAR(h[q], (q + 1) / 10.0 * 40 * 0.25, 1e-12);
}

TEST(Metrics, PatchReliefOfTiltedPlane) {
  DemPatch p;
  p.cellsize = 90;
  const double gx = 0.1, gy = 0.05;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) p.z[3 * r + c] = 200 + gx * (c - 1) * 90 + gy * (1 - r) * 90;
  auto [ti, slope] = patch_relief(p);
  EXPECT_NEAR(ti, 2 * 90 * gx + 2 * 90 * gy, 1e-9);
  EXPECT_NEAR(slope, std::atan(std::hypot(gx, gy)) * 180 / std::numbers::pi, 1e-9);
  p.z[4] = NAN;
  EXPECT_NEAR(patch_relief(p).second, std::atan(std::hypot(gx, gy)) * 180 / std::numbers::pi, 1e-9);
}

TEST(Process, DemPatchOutsideIsNan) {
  raster::Grid dem(raster::GridGeometry{3, 3, 0, 0, 90}, -9999.0, 5.0);
  const auto p = dem_patch_at(dem, {10, 10});
  EXPECT_TRUE(std::isnan(p.z[6]));
  EXPECT_TRUE(std::isnan(p.z[0]));
  EXPECT_EQ(p.z[4], 5.0);
  EXPECT_EQ(p.z[2], 5.0);
}

TEST(Process, KeptFootprintCarriesMetrics) {
  auto w = synth({{80, 118, 2.5}, {150, 100, 1.0}}, 140, 0.5, 200, 10.0, 0.5);
  w.srtm_elev = 103;
  DemPatch patch;
  patch.z.fill(100);
  const auto o = process_waveform(w, patch);
  ASSERT_TRUE(o.kept()) << to_string(o.reason);
  EXPECT_NEAR(o.metrics->tch, 18.0, 0.5);
  auto cloudy = w;
  cloudy.cloud_flag = 1;
  const auto r = process_waveform(cloudy, patch);
  EXPECT_EQ(r.reason, RejectReason::Cloud);
  EXPECT_FALSE(r.metrics);
}

TEST(Io, NdjsonRoundTrip) {
  std::vector<WaveformRecord> in = {synth({{80, 118, 2.5}}, 130, 0.5, 20), synth({{10, 100, 1}}, 101, 0.15, 30)};
  in[0].acquired_at = "2005-10-21";
  in[1].id = "b";
  in[1].sat_ndx = 2;
  std::stringstream ss;
  write_waveforms(ss, in);
  const auto out = read_waveforms(ss);
  ASSERT_EQ(out.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(out[i].id, in[i].id);
    EXPECT_EQ(out[i].intensities, in[i].intensities);
    EXPECT_EQ(out[i].bin_size, in[i].bin_size);
    EXPECT_EQ(out[i].sat_ndx, in[i].sat_ndx);
    EXPECT_EQ(out[i].acquired_at, in[i].acquired_at);
  }
  std::istringstream bad("{\"id\":\"x\"}\n");
  EXPECT_THROW(read_waveforms(bad), Error);
}

TEST(Io, MetricsTableRoundTrip) {
  FootprintMetrics f{"fp1", 10.5, 20.25, {}};
  f.metrics.tch = 12.5;
  f.metrics.h[4] = 3.0;
  f.metrics.slope = 7.0;
  const auto t = metrics_table({f});
  EXPECT_EQ(t.header().size(), 3 + metric_names().size() + 4);
  const auto back = metrics_from_table(t);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(metric_values(back[0].metrics), metric_values(f.metrics));
  EXPECT_EQ(back[0].lat, 20.25);
}
