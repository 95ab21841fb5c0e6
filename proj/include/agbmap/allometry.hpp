#pragma once

// Tree- and plot-level aboveground biomass and map carbon accounting.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agbmap/raster/grid.hpp"
#include "agbmap/text.hpp"

namespace agb::allometry {

struct TreeRecord {
  double wsg = 0.0;     ///< wood specific gravity, g/cm^3
  double dbh = 0.0;     ///< cm
  double height = 0.0;  ///< m
};

struct PlotRecord {
  std::string id;
  double lon = 0.0;
  double lat = 0.0;
  double area_ha = 1.0;
  std::vector<TreeRecord> trees;
  std::optional<double> agb_mg_ha;  ///< takes precedence over trees
};

/// Pan-tropical allometry, kg of dry biomass:
/// 0.0673 * (wsg * dbh^2 * height)^0.973 with dbh in cm and height in m.
inline double tree_agb(const TreeRecord& t) {
  const bool ok = t.wsg > 0 && t.dbh > 0 && t.height > 0 && std::isfinite(t.wsg) && std::isfinite(t.dbh) &&
                  std::isfinite(t.height);
  if (!ok) fail(Errc::InvalidTree, "tree fields must be positive and finite");
  return 0.0673 * std::pow(t.wsg * t.dbh * t.dbh * t.height, 0.973);
}

/// Mg/ha. A direct agb_mg_ha value passes through.
inline double plot_agb_density(const PlotRecord& p) {
  if (!(p.area_ha > 0) || !std::isfinite(p.area_ha)) fail(Errc::InvalidPlot, "plot " + p.id + ": area_ha must be > 0");
  if (p.agb_mg_ha) {
    if (!(*p.agb_mg_ha >= 0)) fail(Errc::InvalidPlot, "plot " + p.id + ": negative agb_mg_ha");
    return *p.agb_mg_ha;
  }
  double kg = 0.0;
  for (const auto& t : p.trees) kg += tree_agb(t);
  return kg / 1000.0 / p.area_ha;
}

enum class CarbonConvention {
  Dimensional,  ///< AGB * cell area (ha) * 0.5
  Literal,      ///< AGB * 0.01 * 0.5 per cell, the printed formula
};

struct CarbonReport {
  double total_tc = 0.0;
  double total_ktc = 0.0;
  std::size_t n_cells = 0;
  double cell_size_m = 0.0;
};

inline constexpr double kCarbonFraction = 0.5;

/// Carbon stock of an AGB map in Mg/ha. Cells are summed in fixed row-major
/// tiles of 64 rows with compensated summation, so the total is bit-stable.
inline CarbonReport carbon_stock(const raster::Grid& agb_map,
                                 CarbonConvention convention = CarbonConvention::Dimensional) {
  const double cs = agb_map.cellsize();
  if (!(cs > 0) || !std::isfinite(cs)) fail(Errc::UnitError, "AGB map has no valid cell size");
  const double per_cell = convention == CarbonConvention::Dimensional ? cs * cs / 1e4 : 0.01;

  CarbonReport r;
  r.cell_size_m = cs;
  double total = 0.0, comp = 0.0;  // Neumaier
  auto add = [&](double x) {
    const double t = total + x;
    comp += std::abs(total) >= std::abs(x) ? (total - t) + x : (x - t) + total;
    total = t;
  };
  constexpr int kTile = 64;
  for (int r0 = 0; r0 < agb_map.nrows(); r0 += kTile) {
    double tile = 0.0;
    for (int row = r0; row < std::min(r0 + kTile, agb_map.nrows()); ++row)
      for (int col = 0; col < agb_map.ncols(); ++col) {
        if (!agb_map.is_valid(row, col)) continue;
        tile += agb_map.at(row, col);
        ++r.n_cells;
      }
    add(tile);
  }
  r.total_tc = (total + comp) * per_cell * kCarbonFraction;
  r.total_ktc = r.total_tc / 1000.0;
  return r;
}

inline text::CsvTable carbon_table(const CarbonReport& r) {
  text::CsvTable t({"total_tC", "total_ktC", "n_cells", "cell_size_m"});
  t.add_row({text::format_exact(r.total_tc), text::format_exact(r.total_ktc), std::to_string(r.n_cells),
             text::format_exact(r.cell_size_m)});
  return t;
}

/// Reads either a plot table (plot_id, lon, lat, area_ha, agb_mg_ha) or a
/// tree table (plot_id, wsg, dbh_cm, height_m). Tree tables carry no
/// geometry; an optional `plots` table supplies lon/lat/area_ha per plot_id
/// (area defaults to 1 ha).
inline std::vector<PlotRecord> plots_from_table(const text::CsvTable& t, const text::CsvTable* plots = nullptr) {
  std::vector<PlotRecord> out;
  if (t.has("agb_mg_ha")) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      PlotRecord p;
      p.id = t.at(i, "plot_id");
      p.lon = t.number(i, "lon");
      p.lat = t.number(i, "lat");
      p.area_ha = t.has("area_ha") ? t.number(i, "area_ha") : 1.0;
      p.agb_mg_ha = t.number(i, "agb_mg_ha");
      if (!(p.area_ha > 0)) fail(Errc::InvalidPlot, "plot " + p.id + ": area_ha must be > 0");
      out.push_back(std::move(p));
    }
    return out;
  }
  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& id = t.at(i, "plot_id");
    auto [it, inserted] = slot.try_emplace(id, out.size());
    if (inserted) {
      PlotRecord p;
      p.id = id;
      out.push_back(std::move(p));
    }
    out[it->second].trees.push_back({t.number(i, "wsg"), t.number(i, "dbh_cm"), t.number(i, "height_m")});
  }
  if (plots) {
    for (std::size_t i = 0; i < plots->size(); ++i) {
      auto it = slot.find(plots->at(i, "plot_id"));
      if (it == slot.end()) continue;
      auto& p = out[it->second];
      p.lon = plots->number(i, "lon");
      p.lat = plots->number(i, "lat");
      if (plots->has("area_ha")) p.area_ha = plots->number(i, "area_ha");
    }
  }
  return out;
}

inline text::CsvTable plot_table(const std::vector<PlotRecord>& plots) {
  text::CsvTable t({"plot_id", "lon", "lat", "area_ha", "agb_mg_ha"});
  for (const auto& p : plots)
    t.add_row({p.id, text::format_exact(p.lon), text::format_exact(p.lat), text::format_exact(p.area_ha),
               text::format_exact(plot_agb_density(p))});
  return t;
}

}  // namespace agb::allometry
