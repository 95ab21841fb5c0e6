#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "agbmap/geostat/samples.hpp"
#include "agbmap/parallel.hpp"
#include "agbmap/text.hpp"

namespace agb::geostat {

struct VariogramBin {
  double lag = 0.0;    ///< mean separation of the pairs in the bin
  double gamma = 0.0;  ///< semivariance
  std::size_t pairs = 0;
};

struct EmpiricalVariogram {
  std::vector<VariogramBin> bins;  ///< non-empty bins only, increasing lag
  double bin_width = 0.0;
  double max_lag = 0.0;
};

/// Exponential semivariogram with the practical-range convention:
/// gamma(h) = nugget + psill * (1 - exp(-3h / range)) for h > 0, gamma(0) = 0.
struct VariogramModel {
  double nugget = 0.0;
  double psill = 0.0;
  double range = 1.0;

  double sill() const noexcept { return nugget + psill; }

  double gamma(double h) const noexcept {
    if (h <= 0) return 0.0;
    return nugget + psill * (1.0 - std::exp(-3.0 * h / range));
  }

  void validate() const {
    require(nugget >= 0 && psill >= 0 && std::isfinite(nugget) && std::isfinite(psill), Errc::InvalidArgument,
            "variogram nugget and psill must be >= 0");
    require(range > 0 && std::isfinite(range), Errc::InvalidArgument, "variogram range must be > 0");
  }
};

/// Bin width and lag cutoff used when none are given: 30 lags up to half the
/// diagonal of the samples' bounding box.
inline std::pair<double, double> default_lags(const SampleSet& s, int n_lags = 30) {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  for (const auto& p : s.locations) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const double max_lag = 0.5 * std::hypot(x1 - x0, y1 - y0);
  return {max_lag / n_lags, max_lag};
}

/// Bin of a separation h: (i*w, (i+1)*w] maps to i, with h = 0 in bin 0.
inline std::size_t lag_bin(double h, double w) {
  const double c = std::ceil(h / w);
  return c <= 1 ? 0 : static_cast<std::size_t>(c) - 1;
}

/// Classical (Matheron) estimator over all pairs with separation <= max_lag.
inline EmpiricalVariogram empirical_variogram(const SampleSet& s, double bin_width, double max_lag) {
  s.validate();
  if (s.size() < 2) fail(Errc::TooFewSamples, "variogram needs at least two samples");
  require(bin_width > 0 && std::isfinite(bin_width), Errc::InvalidArgument, "bin_width must be > 0");
  require(max_lag > 0 && std::isfinite(max_lag), Errc::InvalidArgument, "max_lag must be > 0");
  const std::size_t nb = lag_bin(max_lag, bin_width) + 1;
  const std::size_t n = s.size();

  // fixed chunking keeps the summation order independent of the thread count
  constexpr std::size_t kChunks = 64;
  struct Acc {
    std::vector<double> sq, dist;
    std::vector<std::size_t> cnt;
  };
  std::vector<Acc> acc(kChunks, Acc{std::vector<double>(nb), std::vector<double>(nb), std::vector<std::size_t>(nb)});
  const double max2 = max_lag * max_lag;
  parallel_for(kChunks, [&](std::size_t c) {
    auto& a = acc[c];
    for (std::size_t i = c; i < n; i += kChunks) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d2 = squared_distance(s.locations[i], s.locations[j]);
        if (d2 > max2) continue;
        const double h = std::sqrt(d2);
        const auto b = lag_bin(h, bin_width);
        if (b >= nb) continue;
        const double e = s.values[i] - s.values[j];
        a.sq[b] += e * e;
        a.dist[b] += h;
        ++a.cnt[b];
      }
    }
  });
  EmpiricalVariogram ev;
  ev.bin_width = bin_width;
  ev.max_lag = max_lag;
  for (std::size_t b = 0; b < nb; ++b) {
    double sq = 0.0, dist = 0.0;
    std::size_t cnt = 0;
    for (const auto& a : acc) {
      sq += a.sq[b];
      dist += a.dist[b];
      cnt += a.cnt[b];
    }
    if (cnt == 0) continue;
    ev.bins.push_back({dist / static_cast<double>(cnt), sq / (2.0 * static_cast<double>(cnt)), cnt});
  }
  return ev;
}

inline EmpiricalVariogram empirical_variogram(const SampleSet& s) {
  const auto [w, m] = default_lags(s);
  if (!(w > 0)) fail(Errc::TooFewSamples, "samples share a single location");
  return empirical_variogram(s, w, m);
}

namespace detail {

/// N(h) / h^2, which favors the short lags that carry the nugget and range.
/// A bin of coincident pairs is placed at half a bin width.
inline double fit_weight(const VariogramBin& b, double bin_width) {
  const double h = b.lag > 0 ? b.lag : 0.5 * bin_width;
  return static_cast<double>(b.pairs) / (h * h);
}

struct LinearFit {
  double nugget = 0.0;
  double psill = 0.0;
  double sse = std::numeric_limits<double>::infinity();
};

/// Nonnegative weighted least squares for (nugget, psill) at a fixed range.
/// The minimizer lies in the interior or on one of the faces, so all four
/// candidates are checked.
inline LinearFit fit_sills(const EmpiricalVariogram& ev, double range) {
  double sw = 0, sf = 0, sff = 0, sg = 0, sfg = 0;
  for (const auto& b : ev.bins) {
    const double w = fit_weight(b, ev.bin_width);
    const double f = 1.0 - std::exp(-3.0 * b.lag / range);
    sw += w;
    sf += w * f;
    sff += w * f * f;
    sg += w * b.gamma;
    sfg += w * f * b.gamma;
  }
  auto sse = [&](double c0, double c1) {
    double s = 0.0;
    for (const auto& b : ev.bins) {
      const double r = b.gamma - c0 - c1 * (1.0 - std::exp(-3.0 * b.lag / range));
      s += fit_weight(b, ev.bin_width) * r * r;
    }
    return s;
  };
  LinearFit best;
  auto offer = [&](double c0, double c1) {
    if (c0 < 0 || c1 < 0 || !std::isfinite(c0) || !std::isfinite(c1)) return;
    const double e = sse(c0, c1);
    if (e < best.sse) best = {c0, c1, e};
  };
  const double det = sw * sff - sf * sf;
  if (det > 1e-12 * sw * sff) offer((sff * sg - sf * sfg) / det, (sw * sfg - sf * sg) / det);
  offer(std::max(0.0, sg / sw), 0.0);
  if (sff > 0) offer(0.0, std::max(0.0, sfg / sff));
  offer(0.0, 0.0);
  return best;
}

}  // namespace detail

/// Weighted least-squares exponential fit, weights N(h) / h^2. For each
/// candidate range the sills are solved exactly, so only the range is searched:
/// a log-spaced scan followed by golden-section refinement. The range is
/// bounded by 3 * the largest lag.
inline VariogramModel fit_exponential(const EmpiricalVariogram& ev) {
  if (ev.bins.size() < 4)
    fail(Errc::FitFailure, "exponential fit needs at least 4 non-empty bins, got " + std::to_string(ev.bins.size()));
  double max_lag = 0.0;
  for (const auto& b : ev.bins) {
    if (!std::isfinite(b.gamma) || !std::isfinite(b.lag) || b.pairs == 0)
      fail(Errc::FitFailure, "variogram bins must be finite and non-empty");
    if (!(b.lag > 0) && !(ev.bin_width > 0)) fail(Errc::FitFailure, "zero-lag bin without a bin width");
    max_lag = std::max(max_lag, b.lag);
  }
  if (!(max_lag > 0)) fail(Errc::FitFailure, "variogram lags are all zero");
  const double hi = 3.0 * max_lag;
  const double lo = hi * 1e-4;
  auto cost = [&](double log_a) { return detail::fit_sills(ev, std::exp(log_a)).sse; };

  constexpr int kScan = 200;
  const double la = std::log(lo), lb = std::log(hi);
  int best_i = 0;
  double best_c = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kScan; ++i) {
    const double c = cost(la + (lb - la) * i / kScan);
    if (c < best_c) {
      best_c = c;
      best_i = i;
    }
  }
  double a = la + (lb - la) * std::max(0, best_i - 1) / kScan;
  double b = la + (lb - la) * std::min(kScan, best_i + 1) / kScan;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = cost(x1), f2 = cost(x2);
  for (int it = 0; it < 100 && b - a > 1e-12; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = cost(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = cost(x2);
    }
  }
  double log_range = f1 <= f2 ? x1 : x2;
  if (std::min(f1, f2) > best_c) log_range = la + (lb - la) * best_i / kScan;
  const double range = std::exp(log_range);
  const auto sills = detail::fit_sills(ev, range);
  if (!std::isfinite(sills.sse)) fail(Errc::FitFailure, "exponential fit did not converge");
  return {sills.nugget, sills.psill, range};
}

/// CSV report: one row per bin (lag, gamma, pairs, model) preceded by
/// comment lines carrying the fitted parameters.
inline void write_variogram_csv(std::ostream& out, const EmpiricalVariogram& ev, const VariogramModel* m) {
  using text::format_exact;
  if (m) {
    out << "# model,exponential\n";
    out << "# nugget," << format_exact(m->nugget) << '\n';
    out << "# psill," << format_exact(m->psill) << '\n';
    out << "# range," << format_exact(m->range) << '\n';
  }
  out << "lag,gamma,pairs" << (m ? ",model" : "") << '\n';
  for (const auto& b : ev.bins) {
    out << format_exact(b.lag) << ',' << format_exact(b.gamma) << ',' << b.pairs;
    if (m) out << ',' << format_exact(m->gamma(b.lag));
    out << '\n';
  }
}

inline void write_variogram_csv(const std::filesystem::path& path, const EmpiricalVariogram& ev,
                                const VariogramModel* m) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot write " + path.string());
  write_variogram_csv(out, ev, m);
}

}  // namespace agb::geostat
