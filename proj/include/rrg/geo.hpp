#pragma once

// Local planar projection, 100 m grid quantization and great-circle distance.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>

#include "rrg/error.hpp"

namespace rrg {

inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kDegToRad = std::numbers::pi / 180.0;

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  bool valid() const noexcept {
    return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 &&
           lat <= 90.0 && lon >= -180.0 && lon <= 180.0;
  }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

// Meters east (x) and north (y) of a projection origin.
struct PlanarPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const PlanarPoint&, const PlanarPoint&) = default;
};

inline PlanarPoint project(const GeoPoint& p, const GeoPoint& origin) noexcept {
  return {kEarthRadiusM * (p.lon - origin.lon) * std::cos(origin.lat * kDegToRad) *
              kDegToRad,
          kEarthRadiusM * (p.lat - origin.lat) * kDegToRad};
}

inline GeoPoint unproject(const PlanarPoint& p, const GeoPoint& origin) noexcept {
  return {origin.lat + p.y / (kEarthRadiusM * kDegToRad),
          origin.lon + p.x / (kEarthRadiusM * std::cos(origin.lat * kDegToRad) *
                              kDegToRad)};
}

// Haversine distance in meters.
inline double distance_m(const GeoPoint& a, const GeoPoint& b) noexcept {
  const double dlat = (b.lat - a.lat) * kDegToRad;
  const double dlon = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  const double h = s1 * s1 + std::cos(a.lat * kDegToRad) *
                                 std::cos(b.lat * kDegToRad) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(std::min(1.0, h)));
}

struct CellId {
  std::uint32_t row = 0;
  std::uint32_t col = 0;

  friend auto operator<=>(const CellId&, const CellId&) = default;
};

struct GridSpec {
  GeoPoint origin;  // southwest corner
  double cell_size_m = 100.0;
  std::uint32_t n_rows = 1;
  std::uint32_t n_cols = 1;

  void validate() const {
    if (!origin.valid()) throw InvalidArgument("grid origin is not a valid lat/lon");
    if (!(cell_size_m > 0.0) || !std::isfinite(cell_size_m))
      throw InvalidArgument("cell size must be positive");
    if (n_rows == 0 || n_cols == 0) throw InvalidArgument("grid must have at least one cell");
  }

  std::size_t cell_count() const noexcept {
    return static_cast<std::size_t>(n_rows) * n_cols;
  }
  double width_m() const noexcept { return n_cols * cell_size_m; }
  double height_m() const noexcept { return n_rows * cell_size_m; }

  bool contains(const CellId& c) const noexcept {
    return c.row < n_rows && c.col < n_cols;
  }

  std::uint32_t linear(const CellId& c) const noexcept { return c.row * n_cols + c.col; }
  CellId cell_at(std::uint32_t index) const noexcept {
    return {index / n_cols, index % n_cols};
  }

  // Smallest grid anchored at sw whose cells cover the box up to ne.
  static GridSpec from_bbox(const GeoPoint& sw, const GeoPoint& ne, double cell_size_m) {
    if (!sw.valid() || !ne.valid()) throw InvalidArgument("bbox corners must be valid lat/lon");
    if (!(ne.lat > sw.lat) || !(ne.lon > sw.lon))
      throw InvalidArgument("bbox must have lat1 > lat0 and lon1 > lon0");
    if (!(cell_size_m > 0.0)) throw InvalidArgument("cell size must be positive");
    const PlanarPoint extent = project(ne, sw);
    GridSpec g;
    g.origin = sw;
    g.cell_size_m = cell_size_m;
    g.n_cols = static_cast<std::uint32_t>(std::max(1.0, std::ceil(extent.x / cell_size_m)));
    g.n_rows = static_cast<std::uint32_t>(std::max(1.0, std::ceil(extent.y / cell_size_m)));
    return g;
  }
};

// Floor semantics: a point on a cell boundary belongs to the higher-index cell.
inline std::optional<CellId> try_cell_of_planar(const PlanarPoint& p,
                                                const GridSpec& grid) noexcept {
  if (!(p.x >= 0.0) || !(p.y >= 0.0) || !(p.x < grid.width_m()) ||
      !(p.y < grid.height_m()))
    return std::nullopt;
  const auto col = static_cast<std::uint32_t>(std::floor(p.x / grid.cell_size_m));
  const auto row = static_cast<std::uint32_t>(std::floor(p.y / grid.cell_size_m));
  // x < width can still round up to n_cols in the division
  if (col >= grid.n_cols || row >= grid.n_rows) return std::nullopt;
  return CellId{row, col};
}

inline std::optional<CellId> try_cell_of(const GeoPoint& p, const GridSpec& grid) noexcept {
  return try_cell_of_planar(project(p, grid.origin), grid);
}

inline CellId cell_of_planar(const PlanarPoint& p, const GridSpec& grid) {
  if (auto c = try_cell_of_planar(p, grid)) return *c;
  throw OutOfBounds("planar point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                    ") is outside the grid");
}

inline CellId cell_of(const GeoPoint& p, const GridSpec& grid) {
  if (auto c = try_cell_of(p, grid)) return *c;
  throw OutOfBounds("point (" + std::to_string(p.lat) + ", " + std::to_string(p.lon) +
                    ") is outside the grid");
}

inline PlanarPoint planar_centroid(const CellId& c, const GridSpec& grid) noexcept {
  return {(c.col + 0.5) * grid.cell_size_m, (c.row + 0.5) * grid.cell_size_m};
}

inline GeoPoint centroid(const CellId& c, const GridSpec& grid) noexcept {
  return unproject(planar_centroid(c, grid), grid.origin);
}

}  // namespace rrg

template <>
struct std::hash<rrg::CellId> {
  std::size_t operator()(const rrg::CellId& c) const noexcept {
    return std::hash<std::uint64_t>{}((std::uint64_t{c.row} << 32) | c.col);
  }
};
