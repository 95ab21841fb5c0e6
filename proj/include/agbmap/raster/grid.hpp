#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "agbmap/error.hpp"
#include "agbmap/kdtree.hpp"

namespace agb::raster {

/// Placement of a raster in a projected meter CRS. Rows run north to south
/// (row 0 is the top edge), the origin is the lower-left corner.
struct GridGeometry {
  int ncols = 0;
  int nrows = 0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double cellsize = 1.0;

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;

  std::size_t cell_count() const noexcept {
    return static_cast<std::size_t>(ncols) * static_cast<std::size_t>(nrows);
  }
  double width() const noexcept { return ncols * cellsize; }
  double height() const noexcept { return nrows * cellsize; }
  double top() const noexcept { return origin_y + height(); }

  Point2 cell_center(int row, int col) const noexcept {
    return {origin_x + (col + 0.5) * cellsize, top() - (row + 0.5) * cellsize};
  }

  /// Cell containing (x, y); cells own their west and north edges.
  std::optional<std::pair<int, int>> cell_of(Point2 p) const noexcept {
    const double fc = std::floor((p.x - origin_x) / cellsize);
    const double fr = std::floor((top() - p.y) / cellsize);
    if (!(fc >= 0 && fr >= 0 && fc < ncols && fr < nrows)) return std::nullopt;
    return std::pair{static_cast<int>(fr), static_cast<int>(fc)};
  }

  void validate() const {
    require(ncols > 0 && nrows > 0, Errc::InvalidArgument, "grid dimensions must be positive");
    require(cellsize > 0 && std::isfinite(cellsize), Errc::InvalidArgument, "cellsize must be > 0");
  }
};

/// Single-band georeferenced raster with a nodata sentinel. NaN is always
/// treated as nodata as well.
class Grid {
 public:
  static constexpr double kDefaultNodata = -9999.0;

  Grid() = default;

  explicit Grid(GridGeometry geom, double nodata = kDefaultNodata)
      : Grid(geom, nodata, nodata) {}

  Grid(GridGeometry geom, double nodata, double fill) : geom_(geom), nodata_(nodata) {
    geom_.validate();
    values_.assign(geom_.cell_count(), fill);
  }

  Grid(GridGeometry geom, double nodata, std::vector<double> values)
      : geom_(geom), nodata_(nodata), values_(std::move(values)) {
    geom_.validate();
    require(values_.size() == geom_.cell_count(), Errc::InvalidArgument,
            "grid values length must equal ncols*nrows");
  }

  const GridGeometry& geometry() const noexcept { return geom_; }
  int ncols() const noexcept { return geom_.ncols; }
  int nrows() const noexcept { return geom_.nrows; }
  double cellsize() const noexcept { return geom_.cellsize; }
  double nodata() const noexcept { return nodata_; }
  std::size_t size() const noexcept { return values_.size(); }

  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

  double& at(int row, int col) { return values_[index(row, col)]; }
  double at(int row, int col) const { return values_[index(row, col)]; }

  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(geom_.ncols) +
           static_cast<std::size_t>(col);
  }

  bool is_valid_value(double v) const noexcept { return !std::isnan(v) && v != nodata_; }
  bool is_valid(int row, int col) const noexcept { return is_valid_value(at(row, col)); }
  bool is_valid(std::size_t i) const noexcept { return is_valid_value(values_[i]); }

  /// Value of the cell containing p, or nullopt outside the grid or on nodata.
  std::optional<double> sample(Point2 p) const {
    auto rc = geom_.cell_of(p);
    if (!rc) return std::nullopt;
    const double v = at(rc->first, rc->second);
    if (!is_valid_value(v)) return std::nullopt;
    return v;
  }

  std::size_t valid_count() const noexcept {
    std::size_t n = 0;
    for (double v : values_) n += is_valid_value(v) ? 1 : 0;
    return n;
  }

 private:
  GridGeometry geom_;
  double nodata_ = kDefaultNodata;
  std::vector<double> values_;
};

/// Named co-registered bands in insertion order.
class GridStack {
 public:
  GridStack() = default;

  void add(std::string name, Grid g) {
    if (!bands_.empty())
      require(g.geometry() == bands_.front().second.geometry(), Errc::GeometryMismatch,
              "band '" + name + "' does not share the stack geometry");
    require(!contains(name), Errc::InvalidArgument, "duplicate band name '" + name + "'");
    bands_.emplace_back(std::move(name), std::move(g));
  }

  bool contains(const std::string& name) const {
    for (const auto& b : bands_)
      if (b.first == name) return true;
    return false;
  }

  const Grid& band(const std::string& name) const {
    for (const auto& b : bands_)
      if (b.first == name) return b.second;
    fail(Errc::InvalidArgument, "no band named '" + name + "'");
  }

  const Grid& band(std::size_t i) const { return bands_.at(i).second; }
  const std::string& name(std::size_t i) const { return bands_.at(i).first; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& b : bands_) out.push_back(b.first);
    return out;
  }

  std::size_t size() const noexcept { return bands_.size(); }
  bool empty() const noexcept { return bands_.empty(); }

  const GridGeometry& geometry() const {
    require(!bands_.empty(), Errc::TooFewBands, "empty stack has no geometry");
    return bands_.front().second.geometry();
  }

 private:
  std::vector<std::pair<std::string, Grid>> bands_;
};

}  // namespace agb::raster
