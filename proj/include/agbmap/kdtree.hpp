#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace agb {

/// Planar point in projected meters.
struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double squared_distance(Point2 a, Point2 b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

struct Neighbor {
  std::size_t index = 0;
  double dist2 = 0.0;
};

/// Static 2-d tree over a point set. Queries return neighbors ordered by
/// (distance, index), so equidistant candidates resolve to the lowest index.
class KdTree2 {
 public:
  KdTree2() = default;

  explicit KdTree2(std::span<const Point2> points) : pts_(points.begin(), points.end()) {
    order_.resize(pts_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<std::uint32_t>(i);
    build(0, order_.size(), 0);
  }

  std::size_t size() const noexcept { return pts_.size(); }
  const Point2& point(std::size_t i) const { return pts_[i]; }

  /// The k nearest points (fewer when the tree holds fewer than k).
  std::vector<Neighbor> nearest(Point2 q, std::size_t k) const {
    std::vector<Neighbor> heap;
    if (k == 0 || pts_.empty()) return heap;
    heap.reserve(k + 1);
    search(q, k, 0, order_.size(), 0, heap);
    std::sort_heap(heap.begin(), heap.end(), closer);
    return heap;
  }

  std::optional<Neighbor> nearest_one(Point2 q) const {
    auto n = nearest(q, 1);
    if (n.empty()) return std::nullopt;
    return n.front();
  }

 private:
  static constexpr std::size_t kLeaf = 8;

  static bool closer(const Neighbor& a, const Neighbor& b) noexcept {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
  }

  static double coord(Point2 p, int axis) noexcept { return axis == 0 ? p.x : p.y; }

  void build(std::size_t lo, std::size_t hi, int axis) {
    if (hi - lo <= kLeaf) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](std::uint32_t a, std::uint32_t b) {
                       const double ca = coord(pts_[a], axis), cb = coord(pts_[b], axis);
                       return ca < cb || (ca == cb && a < b);
                     });
    build(lo, mid, 1 - axis);
    build(mid + 1, hi, 1 - axis);
  }

  void offer(std::size_t idx, Point2 q, std::size_t k, std::vector<Neighbor>& heap) const {
    Neighbor cand{idx, squared_distance(q, pts_[idx])};
    if (heap.size() < k) {
      heap.push_back(cand);
      std::push_heap(heap.begin(), heap.end(), closer);
    } else if (closer(cand, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), closer);
      heap.back() = cand;
      std::push_heap(heap.begin(), heap.end(), closer);
    }
  }

  void search(Point2 q, std::size_t k, std::size_t lo, std::size_t hi, int axis,
              std::vector<Neighbor>& heap) const {
    if (hi - lo <= kLeaf) {
      for (std::size_t i = lo; i < hi; ++i) offer(order_[i], q, k, heap);
      return;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    const std::size_t pivot = order_[mid];
    const double diff = coord(q, axis) - coord(pts_[pivot], axis);
    const bool left_first = diff <= 0.0;
    if (left_first)
      search(q, k, lo, mid, 1 - axis, heap);
    else
      search(q, k, mid + 1, hi, 1 - axis, heap);
    offer(pivot, q, k, heap);
    // equal-distance candidates may live across the plane, hence <=
    if (heap.size() < k || diff * diff <= heap.front().dist2) {
      if (left_first)
        search(q, k, mid + 1, hi, 1 - axis, heap);
      else
        search(q, k, lo, mid, 1 - axis, heap);
    }
  }

  std::vector<Point2> pts_;
  std::vector<std::uint32_t> order_;
};

}  // namespace agb
