#pragma once

// Ride poolability: greedy master-ride grouping under time, source-radius and
// destination-radius proximity constraints.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rrg/dpl.hpp"
#include "rrg/error.hpp"
#include "rrg/geo.hpp"
#include "rrg/graph.hpp"

namespace rrg {

struct PoolingParams {
  double dt_s = 300.0;
  double ds_m = 100.0;
  double dd_m = 1000.0;

  void validate() const {
    if (!(dt_s > 0.0) || !(ds_m > 0.0) || !(dd_m > 0.0))
      throw InvalidArgument("pooling thresholds must be positive");
  }
};

// All three bounds are inclusive. Expects master.t <= other.t.
inline bool is_poolable_pair(const RideRequest& master, const RideRequest& other,
                             const PoolingParams& params) noexcept {
  if (static_cast<double>(other.t - master.t) > params.dt_s) return false;
  return distance_m(master.src, other.src) <= params.ds_m &&
         distance_m(master.dst, other.dst) <= params.dd_m;
}

struct PoolGroup {
  std::string master;
  std::vector<std::string> members;  // master first, then in request order

  friend bool operator==(const PoolGroup&, const PoolGroup&) = default;
};

struct PoolabilityResult {
  std::size_t total = 0;
  std::size_t pooled = 0;
  double poolability_pct = 0.0;  // 0 when total == 0
  std::vector<PoolGroup> groups;         // size >= 2, in master order
  std::vector<std::string> singletons;   // unmatched masters, in order
};

inline bool request_order(const RideRequest& a, const RideRequest& b) {
  return a.t != b.t ? a.t < b.t : a.id < b.id;
}

namespace detail {

// Great-circle distance is at least the meridian arc between the latitudes;
// the slack keeps the shortcut from rejecting a pair haversine would accept.
inline bool beyond_radius_by_latitude(const GeoPoint& a, const GeoPoint& b,
                                      double radius_m) noexcept {
  return kEarthRadiusM * std::abs(a.lat - b.lat) * kDegToRad > radius_m * (1.0 + 1e-9) + 1e-9;
}

}  // namespace detail

// Earliest remaining ride (ties by id) becomes master and absorbs every
// remaining ride poolable with it; repeat until no rides remain.
inline PoolabilityResult greedy_pool(std::span<const RideRequest> rides,
                                     const PoolingParams& params) {
  std::vector<std::size_t> order(rides.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return request_order(rides[a], rides[b]); });

  PoolabilityResult res;
  res.total = rides.size();
  std::vector<char> taken(rides.size(), 0);
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (taken[i]) continue;
    taken[i] = 1;
    const RideRequest& master = rides[order[i]];
    members.clear();
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const RideRequest& other = rides[order[j]];
      if (static_cast<double>(other.t - master.t) > params.dt_s) break;
      if (taken[j]) continue;
      if (detail::beyond_radius_by_latitude(master.src, other.src, params.ds_m)) continue;
      if (is_poolable_pair(master, other, params)) {
        taken[j] = 1;
        members.push_back(j);
      }
    }
    if (members.empty()) {
      res.singletons.push_back(master.id);
      continue;
    }
    PoolGroup g;
    g.master = master.id;
    g.members.push_back(master.id);
    for (std::size_t j : members) g.members.push_back(rides[order[j]].id);
    res.pooled += g.members.size();
    res.groups.push_back(std::move(g));
  }
  res.poolability_pct =
      res.total == 0 ? 0.0 : 100.0 * static_cast<double>(res.pooled) / static_cast<double>(res.total);
  return res;
}

struct PoolRow {
  std::size_t interval_index = 0;
  std::int64_t start_epoch = 0;
  std::size_t total = 0;
  std::size_t pooled = 0;
  double pct = 0.0;

  friend bool operator==(const PoolRow&, const PoolRow&) = default;
};

enum class PoolingMode {
  kPerInterval,  // pooling confined to each interval
  kWholeDataset  // one greedy pass over [t0, t1); rows attribute rides to intervals
};

struct PoolabilitySeries {
  std::vector<PoolRow> rows;
  std::vector<PoolGroup> groups;

  std::vector<std::pair<double, double>> scatter() const {
    std::vector<std::pair<double, double>> out;
    out.reserve(rows.size());
    for (const auto& r : rows)
      out.emplace_back(static_cast<double>(r.total), static_cast<double>(r.pooled));
    return out;
  }
};

inline double pct_of(std::size_t pooled, std::size_t total) {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(pooled) / static_cast<double>(total);
}

inline PoolabilitySeries poolability_series(std::span<const RideRequest> rides,
                                            const PoolingParams& params,
                                            std::int64_t interval_len, std::int64_t t0,
                                            std::int64_t t1,
                                            PoolingMode mode = PoolingMode::kPerInterval) {
  params.validate();
  const auto buckets = partition_by_interval(rides, t0, t1, interval_len);
  PoolabilitySeries s;
  s.rows.resize(buckets.size());
  for (std::size_t k = 0; k < buckets.size(); ++k) {
    s.rows[k].interval_index = k;
    s.rows[k].start_epoch = t0 + static_cast<std::int64_t>(k) * interval_len;
    s.rows[k].total = buckets[k].size();
  }
  if (mode == PoolingMode::kPerInterval) {
    for (std::size_t k = 0; k < buckets.size(); ++k) {
      auto r = greedy_pool(buckets[k], params);
      s.rows[k].pooled = r.pooled;
      std::move(r.groups.begin(), r.groups.end(), std::back_inserter(s.groups));
    }
  } else {
    std::vector<RideRequest> all;
    for (const auto& b : buckets) all.insert(all.end(), b.begin(), b.end());
    auto r = greedy_pool(all, params);
    std::vector<std::pair<std::string, std::size_t>> where;
    where.reserve(all.size());
    for (const auto& ride : all)
      where.emplace_back(ride.id, static_cast<std::size_t>(interval_of(ride.t, t0, t1, interval_len)));
    std::sort(where.begin(), where.end());
    for (const auto& g : r.groups)
      for (const auto& id : g.members) {
        const auto it = std::lower_bound(where.begin(), where.end(), std::make_pair(id, std::size_t{0}));
        ++s.rows[it->second].pooled;
      }
    s.groups = std::move(r.groups);
  }
  for (auto& row : s.rows) row.pct = pct_of(row.pooled, row.total);
  return s;
}

// Least-squares line through (total, pooled) pairs.
inline LineFit pool_fit_slope(std::span<const std::pair<double, double>> pairs) {
  std::vector<double> x, y;
  x.reserve(pairs.size());
  y.reserve(pairs.size());
  for (const auto& [total, pooled] : pairs) {
    x.push_back(total);
    y.push_back(pooled);
  }
  return least_squares(x, y);
}

struct PoolSummary {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t intervals = 0;
  std::size_t total_rides = 0;
  std::size_t pooled_rides = 0;
};

inline PoolSummary summarize(std::span<const PoolRow> rows) {
  PoolSummary s;
  s.intervals = rows.size();
  if (rows.empty()) return s;
  s.min = rows.front().pct;
  s.max = rows.front().pct;
  double sum = 0.0;
  for (const auto& r : rows) {
    sum += r.pct;
    s.min = std::min(s.min, r.pct);
    s.max = std::max(s.max, r.pct);
    s.total_rides += r.total;
    s.pooled_rides += r.pooled;
  }
  s.mean = sum / static_cast<double>(rows.size());
  return s;
}

struct SeriesComparison {
  double rmse = 0.0;
  double abs_delta_min = 0.0;
  double abs_delta_max = 0.0;
};

// Row-by-row comparison of two poolability series of equal length.
inline SeriesComparison compare_series(std::span<const PoolRow> a, std::span<const PoolRow> b) {
  if (a.size() != b.size())
    throw InvalidArgument("series lengths differ: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  if (a.empty()) throw InsufficientData("cannot compare empty series");
  SeriesComparison c;
  double ss = 0.0;
  c.abs_delta_min = std::abs(a[0].pct - b[0].pct);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i].pct - b[i].pct);
    ss += d * d;
    c.abs_delta_min = std::min(c.abs_delta_min, d);
    c.abs_delta_max = std::max(c.abs_delta_max, d);
  }
  c.rmse = std::sqrt(ss / static_cast<double>(a.size()));
  return c;
}

}  // namespace rrg
