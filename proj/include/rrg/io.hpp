#pragma once

// CSV ingestion and emission for rides, PoIs, snapshot stats, generated
// points and poolability series. Numbers are written with fixed precision so
// identical inputs give byte-identical files.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <fmt/format.h>

#include "rrg/error.hpp"
#include "rrg/geo.hpp"
#include "rrg/graph.hpp"
#include "rrg/pooling.hpp"
#include "rrg/spatial.hpp"

namespace rrg::io {

inline constexpr std::string_view kRidesHeader = "id,t,src_lat,src_lon,dst_lat,dst_lon";
inline constexpr std::string_view kSnapshotsHeader = "interval_index,start_epoch,n,e,rides,dropped";
inline constexpr std::string_view kPointsHeader = "idx,lat,lon,cell_row,cell_col";
inline constexpr std::string_view kPoolabilityHeader = "interval_index,start_epoch,total,pooled,pct";
inline constexpr std::string_view kDplPlotHeader = "n,e,e_fit";

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

// Days since 1970-01-01 for a proleptic Gregorian date.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) noexcept {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

// Reads a fixed-width run of digits at pos.
inline bool digits(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  out = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    out = out * 10 + (s[i] - '0');
  }
  return true;
}

}  // namespace detail

// Unix epoch seconds, or RFC 3339 ("2016-04-01T20:00:00Z",
// "2016-04-01T20:00:00.5+02:00"). Fractional seconds are truncated.
inline bool parse_timestamp(std::string_view s, std::int64_t& out) {
  if (detail::parse_int(s, out)) return true;
  int y, mo, d, h, mi, se;
  if (!detail::digits(s, 0, 4, y) || s.size() < 20 || s[4] != '-' ||
      !detail::digits(s, 5, 2, mo) || s[7] != '-' || !detail::digits(s, 8, 2, d) ||
      (s[10] != 'T' && s[10] != 't' && s[10] != ' ') || !detail::digits(s, 11, 2, h) ||
      s[13] != ':' || !detail::digits(s, 14, 2, mi) || s[16] != ':' ||
      !detail::digits(s, 17, 2, se))
    return false;
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || se > 60) return false;
  std::size_t pos = 19;
  if (s[pos] == '.') {
    ++pos;
    const std::size_t begin = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    if (pos == begin) return false;
  }
  if (pos >= s.size()) return false;
  std::int64_t offset = 0;
  if (s[pos] == 'Z' || s[pos] == 'z') {
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    int oh, om;
    if (!detail::digits(s, pos + 1, 2, oh) || pos + 3 >= s.size() || s[pos + 3] != ':' ||
        !detail::digits(s, pos + 4, 2, om) || oh > 23 || om > 59)
      return false;
    offset = (oh * 3600 + om * 60) * (s[pos] == '-' ? -1 : 1);
    pos += 6;
  } else {
    return false;
  }
  if (pos != s.size()) return false;
  out = detail::days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
        h * 3600 + mi * 60 + se - offset;
  return true;
}

inline std::vector<RideRequest> read_rides(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(0, "missing header");
  if (detail::trim(line) != kRidesHeader)
    throw SchemaError(0, "expected '" + std::string(kRidesHeader) + "'");
  std::vector<RideRequest> rides;
  std::unordered_set<std::string> seen;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(line);
    if (f.size() != 6)
      throw SchemaError(row, "expected 6 fields, got " + std::to_string(f.size()));
    RideRequest r;
    r.id = std::string(f[0]);
    if (r.id.empty()) throw SchemaError(row, "empty id");
    if (!parse_timestamp(f[1], r.t)) throw SchemaError(row, "bad timestamp '" + std::string(f[1]) + "'");
    if (!detail::parse_double(f[2], r.src.lat) || !detail::parse_double(f[3], r.src.lon) ||
        !detail::parse_double(f[4], r.dst.lat) || !detail::parse_double(f[5], r.dst.lon))
      throw SchemaError(row, "bad coordinate");
    if (!r.src.valid() || !r.dst.valid()) throw SchemaError(row, "coordinate out of range");
    if (!seen.insert(r.id).second) throw SchemaError(row, "duplicate id '" + r.id + "'");
    rides.push_back(std::move(r));
  }
  return rides;
}

inline void write_rides(std::ostream& out, std::span<const RideRequest> rides) {
  out << kRidesHeader << '\n';
  for (const auto& r : rides)
    out << fmt::format("{},{},{:.9f},{:.9f},{:.9f},{:.9f}\n", r.id, r.t, r.src.lat, r.src.lon,
                       r.dst.lat, r.dst.lon);
}

struct PoiRecord {
  GeoPoint point;
  std::uint64_t count = 1;
};

// Header "lat,lon" (one row per PoI) or "lat,lon,count" (pre-aggregated).
inline std::vector<PoiRecord> read_pois(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(0, "missing header");
  const auto header = detail::trim(line);
  bool with_count;
  if (header == "lat,lon") {
    with_count = false;
  } else if (header == "lat,lon,count") {
    with_count = true;
  } else {
    throw SchemaError(0, "expected 'lat,lon' or 'lat,lon,count'");
  }
  std::vector<PoiRecord> out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(line);
    if (f.size() != (with_count ? 3u : 2u)) throw SchemaError(row, "wrong field count");
    PoiRecord p;
    if (!detail::parse_double(f[0], p.point.lat) || !detail::parse_double(f[1], p.point.lon) ||
        !p.point.valid())
      throw SchemaError(row, "bad coordinate");
    if (with_count && !detail::parse_int(f[2], p.count)) throw SchemaError(row, "bad count");
    out.push_back(p);
  }
  return out;
}

// Aggregates PoI records onto grid cells; returns the number dropped as
// outside the grid.
inline std::size_t aggregate_pois(std::span<const PoiRecord> records, const GridSpec& grid,
                                  PoiTable& table) {
  std::size_t dropped = 0;
  for (const auto& r : records) {
    if (const auto c = try_cell_of(r.point, grid))
      table.add(*c, r.count);
    else
      ++dropped;
  }
  return dropped;
}

inline void write_snapshots(std::ostream& out, std::span<const SnapshotStat> stats) {
  out << kSnapshotsHeader << '\n';
  for (const auto& s : stats)
    out << fmt::format("{},{},{},{},{},{}\n", s.interval_index, s.start_epoch, s.n, s.e, s.rides,
                       s.dropped);
}

inline std::vector<SnapshotStat> read_snapshots(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(0, "missing header");
  if (detail::trim(line) != kSnapshotsHeader)
    throw SchemaError(0, "expected '" + std::string(kSnapshotsHeader) + "'");
  std::vector<SnapshotStat> out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(line);
    if (f.size() != 6) throw SchemaError(row, "expected 6 fields");
    SnapshotStat s;
    if (!detail::parse_int(f[0], s.interval_index) || !detail::parse_int(f[1], s.start_epoch) ||
        !detail::parse_int(f[2], s.n) || !detail::parse_int(f[3], s.e) ||
        !detail::parse_int(f[4], s.rides) || !detail::parse_int(f[5], s.dropped))
      throw SchemaError(row, "bad integer field");
    out.push_back(s);
  }
  return out;
}

inline void write_points(std::ostream& out, std::span<const SynthPoint> pts,
                         std::size_t first_idx = 0, bool header = true) {
  if (header) out << kPointsHeader << '\n';
  for (std::size_t i = 0; i < pts.size(); ++i)
    out << fmt::format("{},{:.9f},{:.9f},{},{}\n", first_idx + i, pts[i].point.lat,
                       pts[i].point.lon, pts[i].cell.row, pts[i].cell.col);
}

inline void write_poolability(std::ostream& out, std::span<const PoolRow> rows) {
  out << kPoolabilityHeader << '\n';
  for (const auto& r : rows)
    out << fmt::format("{},{},{},{},{:.6f}\n", r.interval_index, r.start_epoch, r.total, r.pooled,
                       r.pct);
}

inline std::vector<PoolRow> read_poolability(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(0, "missing header");
  if (detail::trim(line) != kPoolabilityHeader)
    throw SchemaError(0, "expected '" + std::string(kPoolabilityHeader) + "'");
  std::vector<PoolRow> out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(line);
    if (f.size() != 5) throw SchemaError(row, "expected 5 fields");
    PoolRow r;
    if (!detail::parse_int(f[0], r.interval_index) || !detail::parse_int(f[1], r.start_epoch) ||
        !detail::parse_int(f[2], r.total) || !detail::parse_int(f[3], r.pooled) ||
        !detail::parse_double(f[4], r.pct))
      throw SchemaError(row, "bad field");
    out.push_back(r);
  }
  return out;
}

}  // namespace rrg::io
