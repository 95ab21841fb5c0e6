#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string_view>

#include "agbmap/waveform/types.hpp"

namespace agb::waveform {

enum class RejectReason { None, NoSignal, SNR, Cloud, Saturated, ElevationMismatch, FitFailure };

inline constexpr std::string_view to_string(RejectReason r) noexcept {
  switch (r) {
    case RejectReason::None: return "";
    case RejectReason::NoSignal: return "NoSignal";
    case RejectReason::SNR: return "SNR";
    case RejectReason::Cloud: return "Cloud";
    case RejectReason::Saturated: return "Saturated";
    case RejectReason::ElevationMismatch: return "ElevationMismatch";
    case RejectReason::FitFailure: return "FitFailure";
  }
  return "";
}

struct FilterOptions {
  double min_snr = 15.0;
  int cloud_ok = 15;  ///< FRir_qaFlag value of a cloud-free shot
  double max_elev_gap = 100.0;
};

struct FilterDecision {
  RejectReason reason = RejectReason::None;
  bool keep() const noexcept { return reason == RejectReason::None; }
};

/// Energy-weighted mean elevation of the noise-subtracted signal between the
/// bounds.
inline double centroid_elevation(const WaveformRecord& w, const SignalBounds& b) {
  double sum = 0.0, wsum = 0.0;
  for (std::size_t i = b.begin_bin; i <= b.end_bin; ++i) {
    const double e = std::max(0.0, w.intensities[i] - b.noise.mean);
    sum += e * w.elevation(i);
    wsum += e;
  }
  return wsum > 0 ? sum / wsum : 0.5 * (b.begin_elev + b.end_elev);
}

/// Rules are checked in order SNR, cloud flag, saturation, elevation gap; the
/// first failure is reported. Missing bounds reject as NoSignal.
inline FilterDecision quality_filter(const WaveformRecord& w, const std::optional<SignalBounds>& bounds,
                                     const FilterOptions& opt = {}) {
  if (!bounds) return {RejectReason::NoSignal};
  if (!(bounds->noise.snr >= opt.min_snr)) return {RejectReason::SNR};
  if (w.cloud_flag != opt.cloud_ok) return {RejectReason::Cloud};
  if (w.sat_ndx != 0) return {RejectReason::Saturated};
  if (std::abs(w.srtm_elev - centroid_elevation(w, *bounds)) > opt.max_elev_gap)
    return {RejectReason::ElevationMismatch};
  return {};
}

}  // namespace agb::waveform
