#pragma once

// ESRI ASCII grid (.asc) reader and writer.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>

#include "agbmap/raster/grid.hpp"
#include "agbmap/text.hpp"

namespace agb::raster {

namespace detail {
inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}
}  // namespace detail

/// Header keys are case-insensitive; xllcenter/yllcenter are accepted and
/// converted to the corner convention. A missing NODATA_value defaults to
/// -9999. Cell values are written with 9 significant digits.
inline Grid read_ascii_grid(std::istream& in, const std::string& source = "<stream>") {
  GridGeometry g;
  double nodata = Grid::kDefaultNodata;
  bool have_ncols = false, have_nrows = false, have_x = false, have_y = false, have_cs = false;
  bool x_center = false, y_center = false;
  double xll = 0.0, yll = 0.0;

  std::string token;
  // header: key/value pairs until the first numeric token
  std::streampos data_start = in.tellg();
  while (in >> token) {
    const std::string key = detail::lower(token);
    const bool is_key = std::isalpha(static_cast<unsigned char>(token.front())) &&
                        key != "nan" && key != "inf" && key != "-inf";
    if (!is_key) {
      in.clear();
      in.seekg(data_start);
      break;
    }
    std::string value;
    if (!(in >> value)) fail(Errc::ParseError, source + ": header key '" + token + "' without value");
    if (key == "ncols") {
      g.ncols = static_cast<int>(text::parse_int(value));
      have_ncols = true;
    } else if (key == "nrows") {
      g.nrows = static_cast<int>(text::parse_int(value));
      have_nrows = true;
    } else if (key == "xllcorner" || key == "xllcenter") {
      xll = text::parse_double(value);
      x_center = key == "xllcenter";
      have_x = true;
    } else if (key == "yllcorner" || key == "yllcenter") {
      yll = text::parse_double(value);
      y_center = key == "yllcenter";
      have_y = true;
    } else if (key == "cellsize") {
      g.cellsize = text::parse_double(value);
      have_cs = true;
    } else if (key == "nodata_value") {
      nodata = text::parse_double(value);
    } else {
      fail(Errc::ParseError, source + ": unknown header key '" + token + "'");
    }
    data_start = in.tellg();
  }
  if (!have_ncols || !have_nrows) fail(Errc::ParseError, source + ": missing ncols/nrows");
  if (!have_cs) fail(Errc::UnitError, source + ": missing cellsize");
  if (!have_x || !have_y) fail(Errc::ParseError, source + ": missing xll/yll origin");
  g.origin_x = x_center ? xll - 0.5 * g.cellsize : xll;
  g.origin_y = y_center ? yll - 0.5 * g.cellsize : yll;
  g.validate();

  std::vector<double> values;
  values.reserve(g.cell_count());
  while (values.size() < g.cell_count() && in >> token) values.push_back(text::parse_double(token));
  if (values.size() != g.cell_count())
    fail(Errc::ParseError, source + ": expected " + std::to_string(g.cell_count()) +
                               " cell values, got " + std::to_string(values.size()));
  return Grid(g, nodata, std::move(values));
}

inline Grid read_ascii_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open " + path);
  return read_ascii_grid(in, path);
}

inline void write_ascii_grid(std::ostream& out, const Grid& grid) {
  const auto& g = grid.geometry();
  out << "ncols " << g.ncols << '\n'
      << "nrows " << g.nrows << '\n'
      << "xllcorner " << text::format_exact(g.origin_x) << '\n'
      << "yllcorner " << text::format_exact(g.origin_y) << '\n'
      << "cellsize " << text::format_exact(g.cellsize) << '\n'
      << "NODATA_value " << text::format_exact(grid.nodata()) << '\n';
  std::string line;
  for (int r = 0; r < g.nrows; ++r) {
    line.clear();
    for (int c = 0; c < g.ncols; ++c) {
      if (c) line += ' ';
      const double v = grid.at(r, c);
      line += grid.is_valid_value(v) ? text::format_sig(v, 9) : text::format_exact(grid.nodata());
    }
    line += '\n';
    out << line;
  }
}

inline void write_ascii_grid(const std::string& path, const Grid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + path);
  write_ascii_grid(out, grid);
  if (!out) fail(Errc::IoError, "write failed: " + path);
}

}  // namespace agb::raster
