#pragma once

// Grayscale PNG quicklook with a linear min-max stretch. Needs zlib.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "agbmap/raster/grid.hpp"

namespace agb::raster {

namespace detail {
inline void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
  buf.push_back(static_cast<unsigned char>(v >> 24));
  buf.push_back(static_cast<unsigned char>(v >> 16));
  buf.push_back(static_cast<unsigned char>(v >> 8));
  buf.push_back(static_cast<unsigned char>(v));
}

inline void put_chunk(std::vector<unsigned char>& png, const char* type, const std::vector<unsigned char>& data) {
  put_u32(png, static_cast<std::uint32_t>(data.size()));
  const std::size_t start = png.size();
  png.insert(png.end(), type, type + 4);
  png.insert(png.end(), data.begin(), data.end());
  const auto crc = crc32(0L, png.data() + start, static_cast<uInt>(png.size() - start));
  put_u32(png, static_cast<std::uint32_t>(crc));
}
}  // namespace detail

/// Encodes the grid as an 8-bit grayscale PNG. Valid cells map linearly from
/// [min, max] to [1, 255]; nodata cells are 0.
inline std::vector<unsigned char> encode_quicklook_png(const Grid& g) {
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.is_valid(i)) lo = std::min(lo, g.values()[i]), hi = std::max(hi, g.values()[i]);
  const double span = hi > lo ? hi - lo : 1.0;

  std::vector<unsigned char> raw;
  raw.reserve(g.size() + static_cast<std::size_t>(g.nrows()));
  for (int r = 0; r < g.nrows(); ++r) {
    raw.push_back(0);  // filter type: none
    for (int c = 0; c < g.ncols(); ++c) {
      if (!g.is_valid(r, c)) {
        raw.push_back(0);
        continue;
      }
      const double t = (g.at(r, c) - lo) / span;
      raw.push_back(static_cast<unsigned char>(1 + std::lround(std::clamp(t, 0.0, 1.0) * 254.0)));
    }
  }
  uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> z(zlen);
  if (compress2(z.data(), &zlen, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
    fail(Errc::IoError, "zlib compression failed");
  z.resize(zlen);

  std::vector<unsigned char> png = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<unsigned char> ihdr;
  detail::put_u32(ihdr, static_cast<std::uint32_t>(g.ncols()));
  detail::put_u32(ihdr, static_cast<std::uint32_t>(g.nrows()));
  ihdr.insert(ihdr.end(), {8, 0, 0, 0, 0});  // 8-bit gray, deflate, adaptive, no interlace
  detail::put_chunk(png, "IHDR", ihdr);
  detail::put_chunk(png, "IDAT", z);
  detail::put_chunk(png, "IEND", {});
  return png;
}

inline void write_quicklook_png(const std::string& path, const Grid& g) {
  const auto png = encode_quicklook_png(g);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
}

}  // namespace agb::raster
