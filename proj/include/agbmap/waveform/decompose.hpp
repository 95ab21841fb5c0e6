#pragma once

// Gaussian mixture decomposition of a noise-subtracted waveform by
// Levenberg-Marquardt, with the component count chosen by BIC.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "agbmap/waveform/types.hpp"

namespace agb::waveform {

struct DecomposeOptions {
  int max_components = 6;
  int max_iterations = 50;
  /// Bins fitted; defaults to the whole waveform. Restricting to the
  /// detected signal plus a margin keeps large batches fast.
  std::size_t first_bin = 0;
  std::size_t last_bin = std::numeric_limits<std::size_t>::max();
  double smoothing_bins = 1.0;  ///< Gaussian smoothing SD used to seed peaks
  /// Components of the selected fit weaker than this (counts above the noise
  /// mean) are dropped from the result; the strongest is always kept.
  double min_amplitude = 0.0;
};

struct Decomposition {
  std::vector<GaussianComponent> components;  ///< center_elev descending
  double residual_rms = 0.0;
  std::vector<double> bic;  ///< bic[k-1] for k components, +inf on a failed fit
  int chosen = 0;
};

namespace detail {

struct FitData {
  std::vector<double> x;  // elevations
  std::vector<double> y;  // noise-subtracted counts
  double bin_size = 1.0;
  double x_lo = 0.0, x_hi = 0.0;
};

// exp(-40) is below double resolution relative to the component peak
inline constexpr double kTailCutoff = 40.0;

// parameter layout per component: log(amplitude), center, log(sigma)
struct Unpacked {
  double a, mu, inv_s2;
};

inline void unpack(const Eigen::VectorXd& p, std::vector<Unpacked>& out) {
  out.resize(static_cast<std::size_t>(p.size() / 3));
  for (std::size_t c = 0; c < out.size(); ++c) {
    const auto i = static_cast<Eigen::Index>(3 * c);
    const double s = std::exp(p(i + 2));
    out[c] = {std::exp(p(i)), p(i + 1), 1.0 / (s * s)};
  }
}

inline double mixture_rss(const FitData& d, const Eigen::VectorXd& p) {
  thread_local std::vector<Unpacked> u;
  unpack(p, u);
  double rss = 0.0;
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    double f = 0.0;
    for (const auto& c : u) {
      const double dx = d.x[i] - c.mu;
      const double e = 0.5 * dx * dx * c.inv_s2;
      if (e < kTailCutoff) f += c.a * std::exp(-e);
    }
    const double r = d.y[i] - f;
    rss += r * r;
  }
  return rss;
}

struct LmResult {
  Eigen::VectorXd params;
  double rss = std::numeric_limits<double>::infinity();
  bool ok = false;
};

inline void clamp_params(const FitData& d, Eigen::VectorXd& p) {
  const double span = d.x_hi - d.x_lo;
  const double log_smin = std::log(d.bin_size);
  const double log_smax = std::log(std::max(span, 2 * d.bin_size));
  for (Eigen::Index c = 0; c < p.size() / 3; ++c) {
    p(3 * c) = std::clamp(p(3 * c), -50.0, 50.0);
    p(3 * c + 1) = std::clamp(p(3 * c + 1), d.x_lo, d.x_hi);
    p(3 * c + 2) = std::clamp(p(3 * c + 2), log_smin, log_smax);
  }
}

inline LmResult levenberg_marquardt(const FitData& d, Eigen::VectorXd p, int max_iter) {
  const Eigen::Index np = p.size();
  const int k = static_cast<int>(np / 3);
  const Eigen::Index n = static_cast<Eigen::Index>(d.x.size());
  Eigen::MatrixXd J(n, np);
  Eigen::VectorXd r(n);
  clamp_params(d, p);
  double rss = mixture_rss(d, p);
  double lambda = 1e-3;
  std::vector<Unpacked> u;
  LmResult out;
  if (!std::isfinite(rss)) return out;

  for (int it = 0; it < max_iter; ++it) {
    unpack(p, u);
    for (Eigen::Index i = 0; i < n; ++i) {
      double f = 0.0;
      const double xi = d.x[static_cast<std::size_t>(i)];
      for (int c = 0; c < k; ++c) {
        const auto& q = u[static_cast<std::size_t>(c)];
        const double dx = xi - q.mu;
        const double e = 0.5 * dx * dx * q.inv_s2;
        const double g = e < kTailCutoff ? q.a * std::exp(-e) : 0.0;
        f += g;
        J(i, 3 * c) = g;
        J(i, 3 * c + 1) = g * dx * q.inv_s2;
        J(i, 3 * c + 2) = g * dx * dx * q.inv_s2;
      }
      r(i) = d.y[static_cast<std::size_t>(i)] - f;
    }
    const Eigen::MatrixXd jtj = J.transpose() * J;
    const Eigen::VectorXd jtr = J.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 12; ++tries) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index j = 0; j < np; ++j) a(j, j) += lambda * std::max(jtj(j, j), 1e-12);
      const Eigen::VectorXd step = a.ldlt().solve(jtr);
      if (!step.allFinite()) {
        lambda *= 10;
        continue;
      }
      Eigen::VectorXd trial = p + step;
      clamp_params(d, trial);
      const double trial_rss = mixture_rss(d, trial);
      if (std::isfinite(trial_rss) && trial_rss < rss) {
        const double gain = rss - trial_rss;
        p = trial;
        rss = trial_rss;
        lambda = std::max(lambda / 10, 1e-12);
        improved = true;
        if (gain <= 1e-6 * (rss + gain) + 1e-300) it = max_iter;  // converged
        break;
      }
      lambda *= 10;
    }
    if (!improved) break;  // no downhill step: at a minimum
  }
  out.params = p;
  out.rss = rss;
  out.ok = std::isfinite(rss);
  return out;
}

inline double half_width_sigma(const FitData& d, std::size_t peak) {
  const double half = 0.5 * d.y[peak];
  std::size_t lo = peak, hi = peak;
  while (lo > 0 && d.y[lo - 1] > half) --lo;
  while (hi + 1 < d.y.size() && d.y[hi + 1] > half) ++hi;
  const double fwhm = static_cast<double>(hi - lo + 1) * d.bin_size;
  return std::max(fwhm / 2.3548, d.bin_size);
}

/// Local maxima of the smoothed signal, strongest first.
inline std::vector<std::size_t> seed_peaks(const FitData& d, double smooth_bins, double min_height) {
  const std::size_t n = d.y.size();
  std::vector<double> s(n, 0.0);
  const int half = std::max(1, static_cast<int>(std::ceil(3 * smooth_bins)));
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0, wsum = 0.0;
    for (int o = -half; o <= half; ++o) {
      const auto j = static_cast<std::ptrdiff_t>(i) + o;
      if (j < 0 || j >= static_cast<std::ptrdiff_t>(n)) continue;
      const double wgt = std::exp(-0.5 * o * o / (smooth_bins * smooth_bins));
      acc += wgt * d.y[static_cast<std::size_t>(j)];
      wsum += wgt;
    }
    s[i] = acc / wsum;
  }
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < n; ++i) {
    const bool left = i == 0 || s[i] > s[i - 1];
    const bool right = i + 1 == n || s[i] >= s[i + 1];
    if (left && right && s[i] > min_height) peaks.push_back(i);
  }
  std::stable_sort(peaks.begin(), peaks.end(), [&](auto a, auto b) { return s[a] > s[b]; });
  return peaks;
}

inline void push_component(Eigen::VectorXd& p, int slot, double amp, double center, double sigma) {
  p(3 * slot) = std::log(std::max(amp, 1e-9));
  p(3 * slot + 1) = center;
  p(3 * slot + 2) = std::log(sigma);
}

}  // namespace detail

/// Fits 1..max_components Gaussians to the noise-subtracted waveform and
/// keeps the count with the smallest BIC = n ln(RSS/n) + 3k ln n. RSS/n is
/// floored at (1e-6 * peak)^2 so exact fits tie and the penalty decides. The
/// search stops early once BIC has risen for two consecutive counts.
inline Decomposition decompose_gaussians(const WaveformRecord& w, const NoiseStats& noise,
                                         const DecomposeOptions& opt = {}) {
  w.validate();
  require(opt.max_components >= 1 && opt.max_components <= 6, Errc::InvalidArgument,
          "max_components must be in 1..6");
  detail::FitData d;
  d.bin_size = w.bin_size;
  const std::size_t lo = std::min(opt.first_bin, w.intensities.size() - 1);
  const std::size_t hi = std::min(opt.last_bin, w.intensities.size() - 1);
  require(hi >= lo + 2, Errc::InvalidArgument, "fit window needs at least 3 bins");
  for (std::size_t i = lo; i <= hi; ++i) {
    d.x.push_back(w.elevation(i));
    d.y.push_back(w.intensities[i] - noise.mean);
  }
  d.x_hi = d.x.front();
  d.x_lo = d.x.back();
  const double n = static_cast<double>(d.y.size());
  const double peak = *std::max_element(d.y.begin(), d.y.end());
  require(peak > 0, Errc::FitFailure, "waveform " + w.id + " has no energy above the noise mean");
  const double rss_floor = n * (1e-6 * peak) * (1e-6 * peak);

  const double min_height = std::max(noise.sd * 2.0, 1e-6 * peak);
  const auto peaks = detail::seed_peaks(d, opt.smoothing_bins, min_height);

  Decomposition out;
  out.bic.assign(static_cast<std::size_t>(opt.max_components), std::numeric_limits<double>::infinity());
  std::vector<detail::LmResult> fits(static_cast<std::size_t>(opt.max_components));

  for (int k = 1; k <= opt.max_components; ++k) {
    std::vector<Eigen::VectorXd> starts;

    // seed from the k strongest smoothed peaks, topping up at residual maxima
    {
      Eigen::VectorXd p(3 * k);
      std::vector<double> resid = d.y;
      int used = 0;
      for (std::size_t q = 0; q < peaks.size() && used < k; ++q, ++used) {
        const std::size_t i = peaks[q];
        detail::push_component(p, used, d.y[i], d.x[i], detail::half_width_sigma(d, i));
      }
      for (int c = 0; c < used; ++c)
        for (std::size_t i = 0; i < resid.size(); ++i) {
          const double z = (d.x[i] - p(3 * c + 1)) / std::exp(p(3 * c + 2));
          resid[i] -= std::exp(p(3 * c)) * std::exp(-0.5 * z * z);
        }
      for (; used < k; ++used) {
        const auto it = std::max_element(resid.begin(), resid.end());
        const std::size_t i = static_cast<std::size_t>(it - resid.begin());
        detail::push_component(p, used, std::max(*it, 1e-3 * peak), d.x[i], 2 * d.bin_size);
        for (std::size_t j = 0; j < resid.size(); ++j) {
          const double z = (d.x[j] - d.x[i]) / (2 * d.bin_size);
          resid[j] -= std::max(*it, 0.0) * std::exp(-0.5 * z * z);
        }
      }
      starts.push_back(std::move(p));
    }

    // grow the (k-1)-component optimum by one component at the worst residual
    if (k > 1 && fits[static_cast<std::size_t>(k - 2)].ok) {
      const auto& prev = fits[static_cast<std::size_t>(k - 2)].params;
      Eigen::VectorXd p(3 * k);
      p.head(3 * (k - 1)) = prev;
      std::size_t arg = 0;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < d.y.size(); ++i) {
        double f = 0.0;
        for (int c = 0; c < k - 1; ++c) {
          const double z = (d.x[i] - prev(3 * c + 1)) / std::exp(prev(3 * c + 2));
          f += std::exp(prev(3 * c)) * std::exp(-0.5 * z * z);
        }
        if (d.y[i] - f > best) best = d.y[i] - f, arg = i;
      }
      detail::push_component(p, k - 1, std::max(best, 1e-3 * peak), d.x[arg], 2 * d.bin_size);
      starts.push_back(std::move(p));
    }

    detail::LmResult best_fit;
    for (auto& s : starts) {
      auto r = detail::levenberg_marquardt(d, s, opt.max_iterations);
      if (r.ok && r.rss < best_fit.rss) best_fit = std::move(r);
    }
    fits[static_cast<std::size_t>(k - 1)] = best_fit;
    if (best_fit.ok)
      out.bic[static_cast<std::size_t>(k - 1)] =
          n * std::log(std::max(best_fit.rss, rss_floor) / n) + 3.0 * k * std::log(n);
    // two successive increases: larger mixtures only fit noise
    const auto& b = out.bic;
    const auto kk = static_cast<std::size_t>(k);
    if (kk >= 3 && b[kk - 1] > b[kk - 2] && b[kk - 2] > b[kk - 3]) break;
  }

  const auto best = std::min_element(out.bic.begin(), out.bic.end());
  if (!std::isfinite(*best)) fail(Errc::FitFailure, "waveform " + w.id + ": no component count converged");
  out.chosen = static_cast<int>(best - out.bic.begin()) + 1;
  const auto& fit = fits[static_cast<std::size_t>(out.chosen - 1)];
  for (int c = 0; c < out.chosen; ++c)
    out.components.push_back(
        {std::exp(fit.params(3 * c)), fit.params(3 * c + 1), std::exp(fit.params(3 * c + 2))});
  if (opt.min_amplitude > 0) {
    const auto strongest = *std::max_element(out.components.begin(), out.components.end(),
                                             [](const auto& a, const auto& b) { return a.amplitude < b.amplitude; });
    std::erase_if(out.components, [&](const auto& c) { return c.amplitude < opt.min_amplitude; });
    if (out.components.empty()) out.components.push_back(strongest);
  }
  std::sort(out.components.begin(), out.components.end(),
            [](const auto& a, const auto& b) { return a.center_elev > b.center_elev; });
  out.residual_rms = std::sqrt(fit.rss / n);
  return out;
}

}  // namespace agb::waveform
