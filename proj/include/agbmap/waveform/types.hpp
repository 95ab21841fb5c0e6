#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "agbmap/error.hpp"

namespace agb::waveform {

/// One large-footprint LiDAR return. Coordinates are stored in the `lon` and
/// `lat` fields but are interpreted in the same projected CRS as the rasters
/// they are matched against.
struct WaveformRecord {
  std::string id;
  double lon = 0.0;
  double lat = 0.0;
  double bin_top_elev = 0.0;  ///< elevation of bin 0, meters
  double bin_size = 0.15;     ///< meters per bin, > 0
  std::vector<double> intensities;  ///< counts ordered top to bottom
  int sat_ndx = 0;
  int cloud_flag = 15;
  double srtm_elev = 0.0;
  std::optional<std::string> acquired_at;

  double elevation(std::size_t bin) const noexcept {
    return bin_top_elev - static_cast<double>(bin) * bin_size;
  }

  void validate() const {
    require(intensities.size() >= 10, Errc::InvalidArgument,
            "waveform " + id + " has fewer than 10 bins");
    require(bin_size > 0, Errc::InvalidArgument, "waveform " + id + " has non-positive bin_size");
    for (double v : intensities)
      require(v >= 0 && v == v, Errc::InvalidArgument, "waveform " + id + " has a negative or NaN count");
  }
};

struct NoiseStats {
  double mean = 0.0;
  double sd = 0.0;
  double snr = 0.0;  ///< (peak - mean) / sd
};

struct SignalBounds {
  NoiseStats noise;
  double threshold = 0.0;
  std::size_t begin_bin = 0;
  std::size_t end_bin = 0;
  double begin_elev = 0.0;
  double end_elev = 0.0;
};

struct GaussianComponent {
  double amplitude = 0.0;   ///< counts above the noise mean, > 0
  double center_elev = 0.0; ///< meters
  double sigma = 0.0;       ///< meters, > 0

  double operator()(double elev) const noexcept {
    const double z = (elev - center_elev) / sigma;
    return amplitude * std::exp(-0.5 * z * z);
  }
};

struct WaveformMetrics {
  double wext = 0.0;
  double tch = 0.0;
  double lead = 0.0;
  double trail = 0.0;
  std::array<double, 9> h{};  ///< h[0] = H10 ... h[8] = H90, depth below begin
  double ti = 0.0;
  double slope = 0.0;  ///< degrees
  double begin_elev = 0.0;
  double end_elev = 0.0;
  double ground_elev = 0.0;
};

/// Metric names in the order used by CSV files and model candidate sets.
inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"wext", "tch", "lead", "trail", "h10", "h20", "h30",
                                                 "h40",  "h50", "h60",  "h70",   "h80", "h90", "ti",
                                                 "slope"};
  return names;
}

inline std::vector<double> metric_values(const WaveformMetrics& m) {
  std::vector<double> v = {m.wext, m.tch, m.lead, m.trail};
  v.insert(v.end(), m.h.begin(), m.h.end());
  v.push_back(m.ti);
  v.push_back(m.slope);
  return v;
}

inline double metric_value(const WaveformMetrics& m, const std::string& name) {
  const auto& names = metric_names();
  const auto values = metric_values(m);
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return values[i];
  fail(Errc::InvalidArgument, "unknown waveform metric '" + name + "'");
}

}  // namespace agb::waveform
