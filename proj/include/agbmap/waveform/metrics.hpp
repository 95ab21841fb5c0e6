#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "agbmap/waveform/types.hpp"

namespace agb::waveform {

/// 3x3 elevations around a footprint, row-major with the northern row first.
/// NaN marks a missing cell.
struct DemPatch {
  std::array<double, 9> z{};
  double cellsize = 90.0;
};

/// The stronger of the two lowest components; on equal amplitude the lower
/// one wins.
inline GaussianComponent identify_ground_peak(const std::vector<GaussianComponent>& components) {
  require(!components.empty(), Errc::InvalidArgument, "ground peak needs at least one component");
  std::vector<GaussianComponent> sorted = components;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.center_elev < b.center_elev; });
  if (sorted.size() == 1) return sorted.front();
  return sorted[1].amplitude > sorted[0].amplitude ? sorted[1] : sorted[0];
}

/// Terrain index (elevation range) and least-squares plane slope in degrees
/// over the valid cells of a 3x3 patch.
inline std::pair<double, double> patch_relief(const DemPatch& patch) {
  double lo = INFINITY, hi = -INFINITY;
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d atz = Eigen::Vector3d::Zero();
  int n = 0;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      const double z = patch.z[static_cast<std::size_t>(3 * r + c)];
      if (std::isnan(z)) continue;
      lo = std::min(lo, z);
      hi = std::max(hi, z);
      const Eigen::Vector3d a(1.0, (c - 1) * patch.cellsize, (1 - r) * patch.cellsize);
      ata += a * a.transpose();
      atz += a * z;
      ++n;
    }
  if (n == 0) return {0.0, 0.0};
  const double ti = hi - lo;
  if (n < 3) return {ti, 0.0};
  Eigen::FullPivLU<Eigen::Matrix3d> lu(ata);
  if (lu.rank() < 3) return {ti, 0.0};
  const Eigen::Vector3d coef = lu.solve(atz);
  return {ti, std::atan(std::hypot(coef(1), coef(2))) * 180.0 / std::numbers::pi};
}

/// Depth below begin_elev at which the cumulative noise-subtracted energy,
/// accumulated top-down between the signal bounds, reaches each fraction.
/// Energy is integrated with the trapezoid rule over bin positions.
inline std::array<double, 9> energy_quantile_depths(const WaveformRecord& w, const SignalBounds& b) {
  std::array<double, 9> out{};
  const std::size_t first = b.begin_bin, last = b.end_bin;
  if (last <= first) return out;
  std::vector<double> e;
  for (std::size_t i = first; i <= last; ++i) e.push_back(std::max(0.0, w.intensities[i] - b.noise.mean));
  std::vector<double> cum(e.size(), 0.0);
  for (std::size_t i = 1; i < e.size(); ++i) cum[i] = cum[i - 1] + 0.5 * (e[i - 1] + e[i]) * w.bin_size;
  const double total = cum.back();
  if (!(total > 0)) return out;
  for (std::size_t q = 0; q < 9; ++q) {
    const double target = total * static_cast<double>(q + 1) / 10.0;
    const auto it = std::lower_bound(cum.begin(), cum.end(), target);
    std::size_t j = static_cast<std::size_t>(it - cum.begin());
    if (j == 0) {
      out[q] = 0.0;
      continue;
    }
    j = std::min(j, cum.size() - 1);
    const double seg = cum[j] - cum[j - 1];
    const double frac = seg > 0 ? (target - cum[j - 1]) / seg : 0.0;
    out[q] = (static_cast<double>(j - 1) + frac) * w.bin_size;
  }
  return out;
}

/// Canopy-structure metrics of one waveform. The canopy top is the highest
/// component, the ground the stronger of the two lowest. Ground elevation is
/// clamped into the signal bounds, lead and trail at zero.
inline WaveformMetrics extract_metrics(const WaveformRecord& w, const SignalBounds& bounds,
                                       const std::vector<GaussianComponent>& components,
                                       const DemPatch& dem_patch) {
  require(!components.empty(), Errc::FitFailure, "waveform " + w.id + " has no Gaussian components");
  WaveformMetrics m;
  m.begin_elev = bounds.begin_elev;
  m.end_elev = bounds.end_elev;
  m.wext = std::max(0.0, bounds.begin_elev - bounds.end_elev);

  const auto top = std::max_element(components.begin(), components.end(), [](const auto& a, const auto& b) {
    return a.center_elev < b.center_elev;
  });
  const GaussianComponent ground = identify_ground_peak(components);
  m.ground_elev = std::clamp(ground.center_elev, m.end_elev, m.begin_elev);
  m.tch = top->center_elev - ground.center_elev;
  m.lead = std::max(0.0, m.begin_elev - top->center_elev);
  m.trail = std::max(0.0, m.ground_elev - m.end_elev);

  m.h = energy_quantile_depths(w, bounds);
  for (auto& h : m.h) h = std::clamp(h, 0.0, m.wext);

  auto [ti, slope] = patch_relief(dem_patch);
  m.ti = ti;
  m.slope = slope;
  return m;
}

}  // namespace agb::waveform
