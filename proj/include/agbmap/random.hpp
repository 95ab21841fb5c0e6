#pragma once

#include <cmath>
#include <cstdint>
#include <iterator>
#include <random>

namespace agb {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent per-entity seeds from a
/// master seed so parallel work never shares a generator.
inline constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                           std::uint64_t index = 0) noexcept {
  return mix_seed(mix_seed(master ^ mix_seed(stream)) + index);
}

inline Rng make_rng(std::uint64_t master, std::uint64_t stream = 0, std::uint64_t index = 0) {
  return Rng(derive_seed(master, stream, index));
}

/// Uniform double in [0, 1) built from the top 53 bits, identical on every
/// platform (std::uniform_real_distribution is not).
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Uniform integer in [0, n) by rejection, platform independent.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

/// Standard normal via Marsaglia's polar method on uniform01.
inline double normal(Rng& rng) {
  double u, v, s;
  do {
    u = 2.0 * uniform01(rng) - 1.0;
    v = 2.0 * uniform01(rng) - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  return u * std::sqrt(-2.0 * std::log(s) / s);
}

inline double normal(Rng& rng, double mean, double sd) { return mean + sd * normal(rng); }

/// Fisher-Yates shuffle on uniform_index.
template <class Range>
void shuffle(Range& r, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(std::size(r));
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = uniform_index(rng, i);
    using std::swap;
    swap(r[i - 1], r[j]);
  }
}

}  // namespace agb
