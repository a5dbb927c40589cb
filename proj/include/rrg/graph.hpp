#pragma once

// Ride Request Graphs: one directed, weighted graph per time interval whose
// nodes are occupied grid cells and whose edges join a ride's source cell to
// its destination cell.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "rrg/error.hpp"
#include "rrg/geo.hpp"

namespace rrg {

struct RideRequest {
  std::string id;
  std::int64_t t = 0;  // Unix epoch seconds
  GeoPoint src;
  GeoPoint dst;

  friend bool operator==(const RideRequest&, const RideRequest&) = default;
};

using CellPair = std::pair<CellId, CellId>;

struct Rrg {
  std::size_t interval_index = 0;
  std::set<CellId> nodes;
  std::map<CellPair, std::uint32_t> edges;  // (src cell, dst cell) -> ride count
  std::size_t dropped = 0;                  // rides with an out-of-grid endpoint

  std::size_t node_count() const noexcept { return nodes.size(); }
  std::size_t edge_count() const noexcept { return edges.size(); }

  std::size_t weight_sum() const noexcept {
    std::size_t w = 0;
    for (const auto& [pair, weight] : edges) w += weight;
    return w;
  }

  void add_ride(const CellId& src, const CellId& dst) {
    nodes.insert(src);
    nodes.insert(dst);
    ++edges[{src, dst}];
  }

  friend bool operator==(const Rrg&, const Rrg&) = default;
};

struct SnapshotStat {
  std::size_t interval_index = 0;
  std::int64_t start_epoch = 0;
  std::size_t n = 0;      // distinct cells
  std::size_t e = 0;      // distinct ordered cell pairs
  std::size_t rides = 0;  // edge weight sum
  std::size_t dropped = 0;

  friend bool operator==(const SnapshotStat&, const SnapshotStat&) = default;
};

inline Rrg build_rrg(std::span<const RideRequest> rides, const GridSpec& grid,
                     std::size_t interval_index = 0) {
  Rrg g;
  g.interval_index = interval_index;
  for (const auto& r : rides) {
    const auto s = try_cell_of(r.src, grid);
    const auto d = try_cell_of(r.dst, grid);
    if (!s || !d) {
      ++g.dropped;
      continue;
    }
    g.add_ride(*s, *d);
  }
  return g;
}

inline SnapshotStat stat_of(const Rrg& g, std::int64_t start_epoch = 0) {
  return {g.interval_index, start_epoch, g.node_count(), g.edge_count(), g.weight_sum(),
          g.dropped};
}

// Node and edge counts from linear cell indices without materializing a graph.
// Used on the hot path of synthesis and calibration; agrees with build_rrg.
struct CellCounter {
  std::vector<std::uint64_t> pairs;
  // seen[c] == stamp marks cell c as counted in the current round
  std::vector<std::uint32_t> seen;
  std::uint32_t stamp = 1;
  std::size_t nodes = 0;

  void clear() {
    pairs.clear();
    nodes = 0;
    if (++stamp == 0) {
      std::fill(seen.begin(), seen.end(), 0u);
      stamp = 1;
    }
  }

  void add(std::uint32_t src, std::uint32_t dst) {
    mark(src);
    mark(dst);
    pairs.push_back((std::uint64_t{src} << 32) | dst);
  }

  // Returns (n, e, rides). Reorders the internal buffers.
  std::tuple<std::size_t, std::size_t, std::size_t> finish() {
    const std::size_t rides = pairs.size();
    std::sort(pairs.begin(), pairs.end());
    const auto e = static_cast<std::size_t>(
        std::unique(pairs.begin(), pairs.end()) - pairs.begin());
    return {nodes, e, rides};
  }

 private:
  void mark(std::uint32_t c) {
    if (c >= seen.size()) seen.resize(std::max<std::size_t>(c + 1, seen.size() * 2), 0u);
    if (seen[c] != stamp) {
      seen[c] = stamp;
      ++nodes;
    }
  }
};

struct Snapshot {
  Rrg graph;
  SnapshotStat stat;
};

inline std::size_t interval_count(std::int64_t t0, std::int64_t t1, std::int64_t interval_len) {
  if (t1 <= t0) throw EmptyRange("time range is empty (t1 <= t0)");
  if (interval_len <= 0) throw InvalidArgument("interval length must be positive");
  return static_cast<std::size_t>((t1 - t0 + interval_len - 1) / interval_len);
}

// Interval index of t in the half-open partition of [t0, t1), or -1 when t
// lies outside the range.
inline std::int64_t interval_of(std::int64_t t, std::int64_t t0, std::int64_t t1,
                                std::int64_t interval_len) noexcept {
  if (t < t0 || t >= t1) return -1;
  return (t - t0) / interval_len;
}

// Rides grouped by interval of [t0, t1); out-of-range rides are omitted.
// Within a bucket, input order is preserved.
inline std::vector<std::vector<RideRequest>> partition_by_interval(
    std::span<const RideRequest> rides, std::int64_t t0, std::int64_t t1,
    std::int64_t interval_len) {
  std::vector<std::vector<RideRequest>> buckets(interval_count(t0, t1, interval_len));
  for (const auto& r : rides) {
    const auto k = interval_of(r.t, t0, t1, interval_len);
    if (k >= 0) buckets[static_cast<std::size_t>(k)].push_back(r);
  }
  return buckets;
}

inline std::vector<Snapshot> snapshot_series(std::span<const RideRequest> rides,
                                             const GridSpec& grid, std::int64_t interval_len,
                                             std::int64_t t0, std::int64_t t1) {
  const auto buckets = partition_by_interval(rides, t0, t1, interval_len);
  std::vector<Snapshot> out;
  out.reserve(buckets.size());
  for (std::size_t k = 0; k < buckets.size(); ++k) {
    Rrg g = build_rrg(buckets[k], grid, k);
    const auto start = t0 + static_cast<std::int64_t>(k) * interval_len;
    SnapshotStat s = stat_of(g, start);
    out.push_back({std::move(g), s});
  }
  return out;
}

inline std::vector<SnapshotStat> stats_of(std::span<const Snapshot> series) {
  std::vector<SnapshotStat> out;
  out.reserve(series.size());
  for (const auto& s : series) out.push_back(s.stat);
  return out;
}

}  // namespace rrg
