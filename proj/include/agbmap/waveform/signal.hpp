#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "agbmap/waveform/types.hpp"

namespace agb::waveform {

struct SignalOptions {
  double k = 4.5;                ///< threshold = mean + k * sd
  double noise_fraction = 0.10;  ///< bins taken from each end for noise
  /// Substitute for a zero noise SD. 0 keeps the strict behavior
  /// (DegenerateNoise); synthetic noiseless waveforms set a small floor.
  double sd_floor = 0.0;
};

namespace detail {

struct WindowStats {
  double mean = 0.0;
  double sd = 0.0;
  bool varies = false;
};

inline WindowStats window_stats(const std::vector<double>& v, const std::vector<std::size_t>& bins) {
  WindowStats s;
  if (bins.empty()) return s;
  for (auto b : bins) s.mean += v[b];
  s.mean /= static_cast<double>(bins.size());
  double ss = 0.0;
  for (auto b : bins) ss += (v[b] - s.mean) * (v[b] - s.mean);
  s.sd = bins.size() > 1 ? std::sqrt(ss / static_cast<double>(bins.size() - 1)) : 0.0;
  return s;
}

}  // namespace detail

/// Noise statistics from the first and last noise_fraction of bins, then
/// signal begin/end as the first and last bins above mean + k*sd. A second
/// pass re-estimates the noise with any window bins inside the detected
/// signal removed.
inline SignalBounds detect_signal_bounds(const WaveformRecord& w, const SignalOptions& opt = {}) {
  w.validate();
  require(opt.k > 0, Errc::InvalidArgument, "threshold multiplier must be > 0");
  const auto& v = w.intensities;
  const std::size_t n = v.size();
  const std::size_t m = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(opt.noise_fraction * n)));

  std::vector<std::size_t> window;
  for (std::size_t i = 0; i < m; ++i) window.push_back(i);
  for (std::size_t i = n - m; i < n; ++i)
    if (i >= m) window.push_back(i);

  const double peak = *std::max_element(v.begin(), v.end());

  auto resolve_sd = [&](detail::WindowStats s) {
    if (s.sd > 0) return s.sd;
    if (opt.sd_floor > 0) return opt.sd_floor;
    const bool any_varies = std::any_of(v.begin(), v.end(), [&](double x) { return x != s.mean; });
    if (any_varies) fail(Errc::DegenerateNoise, "waveform " + w.id + ": zero noise SD with a varying signal");
    fail(Errc::NoSignal, "waveform " + w.id + ": flat waveform");
  };

  auto locate = [&](double threshold, std::size_t& first, std::size_t& last) {
    first = n;
    last = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (v[i] > threshold) {
        if (first == n) first = i;
        last = i;
      }
    return first != n;
  };

  auto stats = detail::window_stats(v, window);
  double sd = resolve_sd(stats);
  double threshold = stats.mean + opt.k * sd;
  std::size_t first = 0, last = 0;
  if (!locate(threshold, first, last)) fail(Errc::NoSignal, "waveform " + w.id + ": no bin above threshold");

  std::vector<std::size_t> clean;
  for (auto b : window)
    if (b < first || b > last) clean.push_back(b);
  if (clean.size() != window.size() && clean.size() >= 2) {
    stats = detail::window_stats(v, clean);
    sd = resolve_sd(stats);
    threshold = stats.mean + opt.k * sd;
    if (!locate(threshold, first, last)) fail(Errc::NoSignal, "waveform " + w.id + ": no bin above threshold");
  }

  SignalBounds b;
  b.noise = {stats.mean, sd, (peak - stats.mean) / sd};
  b.threshold = threshold;
  b.begin_bin = first;
  b.end_bin = last;
  b.begin_elev = w.elevation(first);
  b.end_elev = w.elevation(last);
  return b;
}

}  // namespace agb::waveform
