#pragma once

// The synthesis pipeline over a series of intervals, and the (p, q) search
// that matches a target densification factor.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rrg/densify.hpp"
#include "rrg/dpl.hpp"
#include "rrg/error.hpp"
#include "rrg/graph.hpp"
#include "rrg/random.hpp"
#include "rrg/spatial.hpp"

namespace rrg {

// Points per interval: a constant, or log-uniform on [lo, hi].
struct VolumeProfile {
  enum class Kind { kConstant, kLogUniform };
  Kind kind = Kind::kConstant;
  std::size_t lo = 0;
  std::size_t hi = 0;

  static VolumeProfile constant(std::size_t n) { return {Kind::kConstant, n, n}; }
  static VolumeProfile log_uniform(std::size_t lo, std::size_t hi) {
    if (lo < 1 || hi < lo) throw InvalidArgument("log-uniform profile needs 1 <= lo <= hi");
    return {Kind::kLogUniform, lo, hi};
  }

  // "const:N" or "loguniform:lo,hi"
  static VolumeProfile parse(std::string_view text) {
    auto to_size = [&](std::string_view s) -> std::size_t {
      if (s.empty() || s.find_first_not_of("0123456789") != std::string_view::npos)
        throw InvalidArgument("bad volume profile '" + std::string(text) + "'");
      return std::stoull(std::string(s));
    };
    if (text.starts_with("const:")) return constant(to_size(text.substr(6)));
    if (text.starts_with("loguniform:")) {
      const auto rest = text.substr(11);
      const auto comma = rest.find(',');
      if (comma == std::string_view::npos)
        throw InvalidArgument("bad volume profile '" + std::string(text) + "'");
      return log_uniform(to_size(rest.substr(0, comma)), to_size(rest.substr(comma + 1)));
    }
    throw InvalidArgument("bad volume profile '" + std::string(text) + "'");
  }

  std::size_t draw(Rng& rng) const {
    if (kind == Kind::kConstant) return lo;
    const double a = std::log(static_cast<double>(lo));
    const double b = std::log(static_cast<double>(hi));
    const double m = std::round(std::exp(a + (b - a) * rng.uniform()));
    return std::clamp(static_cast<std::size_t>(m), lo, hi);
  }
};

struct SeriesConfig {
  std::uint64_t seed = 0;
  std::size_t n_intervals = 2016;
  std::int64_t t0 = 0;
  std::int64_t interval_len = 300;
  VolumeProfile volume = VolumeProfile::log_uniform(20, 2000);
};

// Generated points for every interval. Depends on the seed and the spatial
// model only, so one series can be rewired under many (p, q) candidates.
struct SpatialSeries {
  std::vector<std::vector<SynthPoint>> intervals;
};

inline SpatialSeries generate_spatial_series(const SpatialModel& model,
                                             const SeriesConfig& cfg) {
  SpatialSeries s;
  s.intervals.resize(cfg.n_intervals);
  for (std::size_t k = 0; k < cfg.n_intervals; ++k) {
    Rng vol = Rng::stream(cfg.seed, "volume", k);
    const std::size_t m = cfg.volume.draw(vol);
    Rng sp = Rng::stream(cfg.seed, "spatial", k);
    s.intervals[k] = spatial_prop_gen(model, m, sp);
  }
  return s;
}

// Snapshot statistics of the synthetic graphs for one (p, q), computed from
// cell indices directly. The densification stream for interval k is
// independent of p and q, so candidates share random numbers.
inline std::vector<SnapshotStat> densify_stats(const SpatialSeries& series, const GridSpec& grid,
                                               double p, double q, std::uint64_t seed,
                                               std::int64_t t0 = 0,
                                               std::int64_t interval_len = 300) {
  std::vector<SnapshotStat> stats;
  stats.reserve(series.intervals.size());
  CellCounter counter;
  std::vector<std::uint32_t> lin;
  for (std::size_t k = 0; k < series.intervals.size(); ++k) {
    const auto& pts = series.intervals[k];
    Rng rng = Rng::stream(seed, "densify", k);
    const auto rides = dens_prop_gen({pts.size(), p, q}, rng);
    lin.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) lin[i] = grid.linear(pts[i].cell);
    counter.clear();
    for (const auto& r : rides) counter.add(lin[r.src_idx], lin[r.dst_idx]);
    const auto [n, e, w] = counter.finish();
    stats.push_back({k, t0 + static_cast<std::int64_t>(k) * interval_len, n, e, w, 0});
  }
  return stats;
}

struct SynthOutput {
  std::vector<RideRequest> rides;
  std::vector<SnapshotStat> stats;  // of the in-memory graphs
};

// Steps 5-7 for every interval: place points, wire rides, bind timestamps.
inline SynthOutput synthesize(const SpatialSeries& series, const GridSpec& grid, double p,
                              double q, const SeriesConfig& cfg) {
  SynthOutput out;
  std::vector<GeoPoint> geo;
  for (std::size_t k = 0; k < series.intervals.size(); ++k) {
    const auto& pts = series.intervals[k];
    Rng rng = Rng::stream(cfg.seed, "densify", k);
    const auto rides = dens_prop_gen({pts.size(), p, q}, rng);
    geo.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) geo[i] = pts[i].point;
    const std::int64_t start = cfg.t0 + static_cast<std::int64_t>(k) * cfg.interval_len;
    Rng trng = Rng::stream(cfg.seed, "time", k);
    auto bound = bind_rides(rides, geo, start, start + cfg.interval_len, trng,
                            "k" + std::to_string(k) + "-");
    Rrg g;
    g.interval_index = k;
    for (const auto& r : rides) g.add_ride(pts[r.src_idx].cell, pts[r.dst_idx].cell);
    out.stats.push_back(stat_of(g, start));
    std::move(bound.begin(), bound.end(), std::back_inserter(out.rides));
  }
  return out;
}

struct CalibrationOptions {
  std::size_t trial_budget = 160;
  // Candidates within this distance of the target count as exact matches.
  double tolerance = 0.002;
  double q_min = 0.1;
  std::uint64_t seed = 0;  // densification streams; use the series seed
};

struct CalibrationResult {
  double p = 1.0;
  double q = 1.0;
  double achieved_alpha = 0.0;
  double r_squared = 0.0;
  std::size_t trials = 0;
  bool budget_exhausted = false;  // search stopped by the budget, best-so-far returned
};

// Many (p, q) pairs reach the same alpha, so candidates are ranked by the
// error beyond the tolerance first and by larger q (fewer mean outlinks)
// second, then larger p. The search is a coarse 8x8 grid over p in [0, 1]
// and q in [q_min, 1], followed by an 8-direction pattern search with
// halving steps around the incumbent. All candidates share random streams.
inline CalibrationResult calibrate(double target_alpha, const SpatialSeries& series,
                                   const GridSpec& grid, const CalibrationOptions& opt) {
  if (!(target_alpha >= 1.0 && target_alpha <= 2.0))
    throw InvalidArgument("target alpha must lie in [1, 2]");
  if (opt.trial_budget == 0) throw InvalidArgument("trial budget must be at least 1");
  if (!(opt.q_min > 0.0 && opt.q_min <= 1.0)) throw InvalidArgument("q_min must lie in (0, 1]");

  CalibrationResult best;
  double best_excess = std::numeric_limits<double>::infinity();
  bool stop = false;
  auto better = [&](double excess, double p, double q) {
    if (excess != best_excess) return excess < best_excess;
    if (q != best.q) return q > best.q;
    return p > best.p;
  };
  // Returns true when the candidate became the incumbent.
  auto evaluate_at = [&](double p, double q) {
    if (stop) return false;
    if (best.trials >= opt.trial_budget) {
      best.budget_exhausted = true;
      stop = true;
      return false;
    }
    ++best.trials;
    const auto stats = densify_stats(series, grid, p, q, opt.seed);
    double alpha = std::numeric_limits<double>::quiet_NaN(), r2 = 0.0;
    try {
      const DplFit f = fit_dpl(stats);
      alpha = f.alpha;
      r2 = f.r_squared;
    } catch (const Error&) {
    }
    const double excess = std::isnan(alpha)
                              ? std::numeric_limits<double>::infinity()
                              : std::max(0.0, std::abs(alpha - target_alpha) - opt.tolerance);
    if (best.trials == 1 || better(excess, p, q)) {
      best_excess = excess;
      best.p = p;
      best.q = q;
      best.achieved_alpha = alpha;
      best.r_squared = r2;
      return true;
    }
    return false;
  };

  constexpr int kCoarse = 8;
  const double q_span = 1.0 - opt.q_min;
  for (int i = 0; i < kCoarse; ++i)
    for (int j = 0; j < kCoarse; ++j)
      evaluate_at(1.0 - i / double(kCoarse - 1), 1.0 - j * q_span / (kCoarse - 1));

  double step_p = 0.5 / (kCoarse - 1);
  double step_q = 0.5 * q_span / (kCoarse - 1);
  while (!stop && step_p > 1e-3) {
    const double p0 = best.p, q0 = best.q;
    bool moved = false;
    for (int dp = -1; dp <= 1 && !moved; ++dp) {
      for (int dq = -1; dq <= 1 && !moved; ++dq) {
        if (dp == 0 && dq == 0) continue;
        const double p = p0 + dp * step_p, q = q0 + dq * step_q;
        if (p < 0.0 || p > 1.0 || q < opt.q_min || q > 1.0) continue;
        moved = evaluate_at(p, q);
      }
    }
    if (!moved) {
      step_p /= 2.0;
      step_q /= 2.0;
    }
  }
  return best;
}

}  // namespace rrg
