#pragma once

// Command implementations behind the `rrg` executable. Each command is a pure
// function of its input files, flags and seed; commands talk to each other
// only through the files they write.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <json.hpp>

#include "rrg/dpl.hpp"
#include "rrg/error.hpp"
#include "rrg/geo.hpp"
#include "rrg/graph.hpp"
#include "rrg/io.hpp"
#include "rrg/pipeline.hpp"
#include "rrg/pooling.hpp"
#include "rrg/spatial.hpp"

namespace rrg::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kSchema = 2,
  kEmpty = 3,
  kFit = 4,
  kPrior = 5,
};

struct RunConfig {
  std::string rides_path;
  std::string pois_path;
  std::string snapshots_path;  // fit-dpl input; defaults to <out_dir>/snapshots.csv
  std::string compare_path;
  std::string out_dir = ".";
  std::optional<std::array<double, 4>> bbox;  // lat0, lon0, lat1, lon1
  double cell_m = 100.0;
  std::int64_t interval_s = 300;
  std::optional<std::int64_t> t0;
  std::optional<std::int64_t> t1;
  PoolingParams pooling;
  bool whole_dataset = false;
  bool dump_groups = false;
  bool dump_graphs = false;
  bool dump_points = false;
  std::optional<double> p;
  std::optional<double> q;
  std::optional<double> target_alpha;
  std::string m_profile = "loguniform:20,2000";
  std::size_t n_intervals = 2016;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> max_s;
  std::optional<double> max_r;
  std::size_t budget = 160;
};

// Default start of synthetic series: 2016-04-01T00:00:00Z.
inline constexpr std::int64_t kDefaultSynthStart = 1459468800;

namespace detail {

struct CommandError {
  int code;
  std::string message;
};

inline std::ifstream open_input(const std::string& path, const char* what) {
  if (path.empty()) throw CommandError{kUsage, fmt::format("missing --{} path", what)};
  std::ifstream in(path);
  if (!in) throw CommandError{kSchema, fmt::format("cannot read {} file '{}'", what, path)};
  return in;
}

inline std::filesystem::path out_file(const RunConfig& cfg, const char* name) {
  std::filesystem::create_directories(cfg.out_dir);
  return std::filesystem::path(cfg.out_dir) / name;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CommandError{kUsage, fmt::format("cannot write '{}'", path.string())};
  out << text;
}

inline std::vector<RideRequest> load_rides(const RunConfig& cfg) {
  auto in = open_input(cfg.rides_path, "rides");
  try {
    return io::read_rides(in);
  } catch (const SchemaError& e) {
    throw CommandError{kSchema, fmt::format("{}: {}", cfg.rides_path, e.what())};
  }
}

inline GridSpec grid_from(const RunConfig& cfg, const std::vector<RideRequest>* rides) {
  try {
    if (cfg.bbox) {
      const auto& b = *cfg.bbox;
      return GridSpec::from_bbox({b[0], b[1]}, {b[2], b[3]}, cfg.cell_m);
    }
    if (!rides || rides->empty()) throw CommandError{kUsage, "--bbox is required"};
    GeoPoint sw{90.0, 180.0}, ne{-90.0, -180.0};
    for (const auto& r : *rides) {
      for (const auto& p : {r.src, r.dst}) {
        sw.lat = std::min(sw.lat, p.lat);
        sw.lon = std::min(sw.lon, p.lon);
        ne.lat = std::max(ne.lat, p.lat);
        ne.lon = std::max(ne.lon, p.lon);
      }
    }
    // Extend by one cell so the northern and eastern extremes fall inside.
    GridSpec g = GridSpec::from_bbox(sw, {std::max(ne.lat, sw.lat + 1e-6), std::max(ne.lon, sw.lon + 1e-6)},
                                     cfg.cell_m);
    ++g.n_rows;
    ++g.n_cols;
    return g;
  } catch (const InvalidArgument& e) {
    throw CommandError{kUsage, e.what()};
  }
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  return a / b - ((a % b != 0) && ((a < 0) != (b < 0)));
}

// Explicit --t0/--t1, or the interval-aligned span of the data.
inline std::pair<std::int64_t, std::int64_t> time_range(const RunConfig& cfg,
                                                        const std::vector<RideRequest>& rides) {
  if (cfg.interval_s <= 0) throw CommandError{kUsage, "--interval-s must be positive"};
  std::int64_t lo = 0, hi = 0;
  if (!rides.empty()) {
    lo = rides.front().t;
    hi = rides.front().t;
    for (const auto& r : rides) {
      lo = std::min(lo, r.t);
      hi = std::max(hi, r.t);
    }
  }
  const std::int64_t t0 = cfg.t0.value_or(floor_div(lo, cfg.interval_s) * cfg.interval_s);
  const std::int64_t t1 = cfg.t1.value_or((floor_div(hi, cfg.interval_s) + 1) * cfg.interval_s);
  if (t1 <= t0) throw CommandError{kUsage, "empty time range (t1 <= t0)"};
  return {t0, t1};
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const CommandError& e) {
    spdlog::error("{}", e.message);
    return e.code;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  }
}

}  // namespace detail

// Writes snapshots.csv (and graphs.csv with dump_graphs).
inline int cmd_build_rrg(const RunConfig& cfg) {
  return detail::guarded([&] {
    const auto rides = detail::load_rides(cfg);
    if (rides.empty()) throw detail::CommandError{kEmpty, "no rides in input"};
    const GridSpec grid = detail::grid_from(cfg, &rides);
    const auto [t0, t1] = detail::time_range(cfg, rides);
    const auto series = snapshot_series(rides, grid, cfg.interval_s, t0, t1);
    std::size_t used = 0, dropped = 0;
    for (const auto& s : series) {
      used += s.stat.rides;
      dropped += s.stat.dropped;
    }
    if (used == 0) throw detail::CommandError{kEmpty, "no usable rides inside grid and time range"};
    if (dropped > 0) spdlog::warn("dropped {} rides with an endpoint outside the grid", dropped);
    spdlog::info("{} snapshots, {} rides on a {}x{} grid", series.size(), used, grid.n_rows,
                 grid.n_cols);

    std::ostringstream snap;
    io::write_snapshots(snap, stats_of(series));
    detail::write_text(detail::out_file(cfg, "snapshots.csv"), snap.str());
    if (cfg.dump_graphs) {
      std::ostringstream g;
      g << "interval_index,src_row,src_col,dst_row,dst_col,weight\n";
      for (const auto& s : series)
        for (const auto& [pair, w] : s.graph.edges)
          g << fmt::format("{},{},{},{},{},{}\n", s.graph.interval_index, pair.first.row,
                           pair.first.col, pair.second.row, pair.second.col, w);
      detail::write_text(detail::out_file(cfg, "graphs.csv"), g.str());
    }
    return int{kOk};
  });
}

// Writes dpl.json and dpl_plot.csv.
inline int cmd_fit_dpl(const RunConfig& cfg) {
  return detail::guarded([&] {
    const std::string path = cfg.snapshots_path.empty()
                                 ? (std::filesystem::path(cfg.out_dir) / "snapshots.csv").string()
                                 : cfg.snapshots_path;
    auto in = detail::open_input(path, "snapshots");
    std::vector<SnapshotStat> stats;
    try {
      stats = io::read_snapshots(in);
    } catch (const SchemaError& e) {
      throw detail::CommandError{kSchema, fmt::format("{}: {}", path, e.what())};
    }
    DplFit fit;
    try {
      fit = fit_dpl(stats);
    } catch (const InsufficientData& e) {
      throw detail::CommandError{kFit, e.what()};
    } catch (const DegenerateX& e) {
      throw detail::CommandError{kFit, e.what()};
    }
    if (!fit.alpha_in_expected_range())
      spdlog::warn("alpha = {:.4f} lies outside the usual [1, 2] range", fit.alpha);
    spdlog::info("alpha = {:.6f}, C = {:.6f}, r^2 = {:.6f} over {} snapshots ({} excluded)",
                 fit.alpha, fit.c, fit.r_squared, fit.points_used, fit.excluded);

    nlohmann::ordered_json j;
    j["alpha"] = fit.alpha;
    j["c"] = fit.c;
    j["r_squared"] = fit.r_squared;
    j["points_used"] = fit.points_used;
    j["excluded"] = fit.excluded;
    detail::write_text(detail::out_file(cfg, "dpl.json"), j.dump(2) + "\n");

    std::ostringstream plot;
    plot << io::kDplPlotHeader << '\n';
    for (const auto& s : stats) {
      if (s.n == 0 || s.e == 0) continue;
      plot << fmt::format("{},{},{:.6f}\n", s.n, s.e, evaluate(fit, static_cast<double>(s.n)));
    }
    detail::write_text(detail::out_file(cfg, "dpl_plot.csv"), plot.str());
    return int{kOk};
  });
}

// Writes rides.csv, plus calibration.json when a target alpha is given and
// points.csv with dump_points.
inline int cmd_synth(const RunConfig& cfg) {
  return detail::guarded([&] {
    if (!cfg.seed) throw detail::CommandError{kUsage, "--seed is required for synth"};
    if (!cfg.bbox) throw detail::CommandError{kUsage, "--bbox is required for synth"};
    if (!cfg.target_alpha && !(cfg.p && cfg.q))
      throw detail::CommandError{kUsage, "give --target-alpha or both --p and --q"};
    VolumeProfile volume;
    try {
      volume = VolumeProfile::parse(cfg.m_profile);
    } catch (const InvalidArgument& e) {
      throw detail::CommandError{kUsage, e.what()};
    }
    if (cfg.p && !(*cfg.p >= 0.0 && *cfg.p <= 1.0))
      throw detail::CommandError{kUsage, "--p must lie in [0, 1]"};
    if (cfg.q && !(*cfg.q > 0.0 && *cfg.q <= 1.0))
      throw detail::CommandError{kUsage, "--q must lie in (0, 1]"};
    if (cfg.target_alpha && !(*cfg.target_alpha >= 1.0 && *cfg.target_alpha <= 2.0))
      throw detail::CommandError{kUsage, "--target-alpha must lie in [1, 2]"};
    const GridSpec grid = detail::grid_from(cfg, nullptr);

    auto poi_in = detail::open_input(cfg.pois_path, "pois");
    std::vector<io::PoiRecord> records;
    try {
      records = io::read_pois(poi_in);
    } catch (const SchemaError& e) {
      throw detail::CommandError{kSchema, fmt::format("{}: {}", cfg.pois_path, e.what())};
    }
    PoiTable table;
    const std::size_t poi_dropped = io::aggregate_pois(records, grid, table);
    if (poi_dropped > 0) spdlog::warn("dropped {} PoIs outside the grid", poi_dropped);

    std::vector<CellId> history;
    if (!cfg.rides_path.empty()) {
      for (const auto& r : detail::load_rides(cfg)) {
        if (auto c = try_cell_of(r.src, grid)) history.push_back(*c);
        if (auto c = try_cell_of(r.dst, grid)) history.push_back(*c);
      }
    }
    const auto subset = select_subset(table, history);
    SpatialModel model;
    try {
      model = build_spatial_model(table, subset, grid, {cfg.max_r, cfg.max_s});
    } catch (const EmptySubset& e) {
      throw detail::CommandError{kPrior, e.what()};
    } catch (const ZeroMass& e) {
      throw detail::CommandError{kPrior, e.what()};
    } catch (const TooFewPoints& e) {
      throw detail::CommandError{kPrior, e.what()};
    }
    spdlog::info("node subset of {} cells, bandwidth {:.1f} x {:.1f} m, max_s {}, max_r {:.4g}",
                 subset.size(), model.kde.hx, model.kde.hy, model.walk.max_s, model.walk.max_r);

    SeriesConfig sc;
    sc.seed = *cfg.seed;
    sc.n_intervals = cfg.n_intervals;
    sc.t0 = cfg.t0.value_or(kDefaultSynthStart);
    sc.interval_len = cfg.interval_s;
    sc.volume = volume;
    if (sc.interval_len <= 0) throw detail::CommandError{kUsage, "--interval-s must be positive"};
    const SpatialSeries series = generate_spatial_series(model, sc);

    double p = cfg.p.value_or(1.0), q = cfg.q.value_or(1.0);
    if (cfg.target_alpha) {
      CalibrationOptions opt;
      opt.trial_budget = cfg.budget;
      opt.seed = sc.seed;
      CalibrationResult cal;
      try {
        cal = calibrate(*cfg.target_alpha, series, grid, opt);
      } catch (const InvalidArgument& e) {
        throw detail::CommandError{kUsage, e.what()};
      }
      p = cal.p;
      q = cal.q;
      if (cal.budget_exhausted) spdlog::warn("calibration budget exhausted; using best so far");
      spdlog::info("calibrated p = {:.6f}, q = {:.6f}: alpha {:.6f}, r^2 {:.6f} after {} trials", p,
                   q, cal.achieved_alpha, cal.r_squared, cal.trials);
      nlohmann::ordered_json j;
      j["p"] = cal.p;
      j["q"] = cal.q;
      if (std::isnan(cal.achieved_alpha))
        j["achieved_alpha"] = nullptr;
      else
        j["achieved_alpha"] = cal.achieved_alpha;
      j["r_squared"] = cal.r_squared;
      j["trials"] = cal.trials;
      j["target_alpha"] = *cfg.target_alpha;
      j["budget_exhausted"] = cal.budget_exhausted;
      detail::write_text(detail::out_file(cfg, "calibration.json"), j.dump(2) + "\n");
    }

    const SynthOutput out = synthesize(series, grid, p, q, sc);
    if (out.rides.empty()) {
      spdlog::warn("volume profile produced no rides");
    } else {
      try {
        const DplFit f = fit_dpl(out.stats);
        spdlog::info("{} rides; synthetic alpha {:.6f} (r^2 {:.6f})", out.rides.size(), f.alpha,
                     f.r_squared);
      } catch (const Error&) {
        spdlog::info("{} rides", out.rides.size());
      }
    }
    std::ostringstream rides_csv;
    io::write_rides(rides_csv, out.rides);
    detail::write_text(detail::out_file(cfg, "rides.csv"), rides_csv.str());
    if (cfg.dump_points) {
      std::ostringstream pts;
      pts << io::kPointsHeader << '\n';
      std::size_t idx = 0;
      for (const auto& interval : series.intervals) {
        io::write_points(pts, interval, idx, false);
        idx += interval.size();
      }
      detail::write_text(detail::out_file(cfg, "points.csv"), pts.str());
    }
    return int{kOk};
  });
}

// Writes poolability.csv and poolability_summary.json (and groups.json with
// dump_groups).
inline int cmd_poolability(const RunConfig& cfg) {
  return detail::guarded([&] {
    try {
      cfg.pooling.validate();
    } catch (const InvalidArgument& e) {
      throw detail::CommandError{kUsage, e.what()};
    }
    const auto rides = detail::load_rides(cfg);
    if (rides.empty()) throw detail::CommandError{kEmpty, "no rides in input"};
    const auto [t0, t1] = detail::time_range(cfg, rides);
    const auto mode = cfg.whole_dataset ? PoolingMode::kWholeDataset : PoolingMode::kPerInterval;
    const auto series = poolability_series(rides, cfg.pooling, cfg.interval_s, t0, t1, mode);
    const PoolSummary sum = summarize(series.rows);
    if (sum.total_rides == 0) throw detail::CommandError{kEmpty, "no rides inside the time range"};

    std::ostringstream csv;
    io::write_poolability(csv, series.rows);
    detail::write_text(detail::out_file(cfg, "poolability.csv"), csv.str());

    nlohmann::ordered_json j;
    j["mode"] = cfg.whole_dataset ? "whole-dataset" : "per-interval";
    j["dt_s"] = cfg.pooling.dt_s;
    j["ds_m"] = cfg.pooling.ds_m;
    j["dd_m"] = cfg.pooling.dd_m;
    j["intervals"] = sum.intervals;
    j["total_rides"] = sum.total_rides;
    j["pooled_rides"] = sum.pooled_rides;
    j["mean"] = sum.mean;
    j["min"] = sum.min;
    j["max"] = sum.max;
    const auto scatter = series.scatter();
    try {
      const LineFit line = pool_fit_slope(scatter);
      j["ls_slope"] = line.slope;
      j["ls_intercept"] = line.intercept;
    } catch (const Error&) {
      j["ls_slope"] = nullptr;
      j["ls_intercept"] = nullptr;
    }
    if (!cfg.compare_path.empty()) {
      auto in = detail::open_input(cfg.compare_path, "compare");
      std::vector<PoolRow> other;
      try {
        other = io::read_poolability(in);
      } catch (const SchemaError& e) {
        throw detail::CommandError{kSchema, fmt::format("{}: {}", cfg.compare_path, e.what())};
      }
      SeriesComparison c;
      try {
        // Compare what was written, so a series compared with its own file is exact.
        std::istringstream written(csv.str());
        c = compare_series(io::read_poolability(written), other);
      } catch (const Error& e) {
        throw detail::CommandError{kSchema, e.what()};
      }
      spdlog::info("RMSE: {:.2f}, abs. delta min={:.2f}, abs. delta max={:.2f}", c.rmse,
                   c.abs_delta_min, c.abs_delta_max);
      j["compare"] = {{"rmse", c.rmse},
                      {"abs_delta_min", c.abs_delta_min},
                      {"abs_delta_max", c.abs_delta_max}};
    }
    spdlog::info("poolability mean {:.2f}%, min {:.2f}%, max {:.2f}% over {} intervals", sum.mean,
                 sum.min, sum.max, sum.intervals);
    detail::write_text(detail::out_file(cfg, "poolability_summary.json"), j.dump(2) + "\n");

    if (cfg.dump_groups) {
      nlohmann::ordered_json groups = nlohmann::ordered_json::array();
      for (const auto& g : series.groups)
        groups.push_back({{"master", g.master}, {"members", g.members}});
      detail::write_text(detail::out_file(cfg, "groups.json"), groups.dump(2) + "\n");
    }
    return int{kOk};
  });
}

}  // namespace rrg::cli
