#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "agbmap/error.hpp"
#include "agbmap/kdtree.hpp"

namespace agb::geostat {

/// Point values in projected meters, e.g. regression residuals.
struct SampleSet {
  std::vector<Point2> locations;
  std::vector<double> values;

  std::size_t size() const noexcept { return locations.size(); }
  bool empty() const noexcept { return locations.empty(); }

  void add(Point2 p, double v) {
    locations.push_back(p);
    values.push_back(v);
  }

  void validate() const {
    require(locations.size() == values.size(), Errc::InvalidArgument, "sample locations/values length mismatch");
    for (std::size_t i = 0; i < size(); ++i)
      require(std::isfinite(locations[i].x) && std::isfinite(locations[i].y) && std::isfinite(values[i]),
              Errc::InvalidArgument, "sample " + std::to_string(i) + " is not finite");
  }
};

/// Merges samples closer than `tol` meters. Each group keeps the location of
/// its lowest-index member and the mean of its values; groups appear in
/// order of that member.
inline SampleSet deduplicate(const SampleSet& s, double tol = 1e-6) {
  s.validate();
  const std::size_t n = s.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return s.locations[a].x < s.locations[b].x || (s.locations[a].x == s.locations[b].x && a < b);
  });
  std::vector<std::size_t> group(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    const auto i = order[a];
    if (group[i] != n) continue;
    group[i] = i;
    for (std::size_t b = a + 1; b < n && s.locations[order[b]].x - s.locations[i].x <= tol; ++b) {
      const auto j = order[b];
      if (group[j] == n && squared_distance(s.locations[i], s.locations[j]) <= tol * tol) group[j] = i;
    }
  }
  // a group is led by its first-visited member in x order; relabel to the lowest index
  std::vector<std::size_t> lead(n, n);
  for (std::size_t i = 0; i < n; ++i)
    if (lead[group[i]] == n) lead[group[i]] = i;
  std::vector<double> sum(n, 0.0);
  std::vector<int> count(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    sum[lead[group[i]]] += s.values[i];
    ++count[lead[group[i]]];
  }
  SampleSet out;
  for (std::size_t i = 0; i < n; ++i)
    if (count[i] > 0) out.add(s.locations[i], sum[i] / count[i]);
  return out;
}

}  // namespace agb::geostat
