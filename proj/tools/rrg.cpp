// rrg: build ride request graphs, fit densification, synthesize rides and
// measure poolability. See README.md for the pipeline.

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "rrg/cli.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_logger_st("rrg");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("RRG_LOG")) {
    std::string level(env);
    std::transform(level.begin(), level.end(), level.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

void add_bbox(CLI::App* cmd, rrg::cli::RunConfig& cfg, bool required) {
  auto* opt = cmd->add_option_function<std::vector<double>>(
                     "--bbox",
                     [&cfg](const std::vector<double>& v) {
                       cfg.bbox = std::array<double, 4>{v[0], v[1], v[2], v[3]};
                     },
                     "Grid bounding box lat0,lon0,lat1,lon1 (southwest, northeast)")
                  ->delimiter(',')
                  ->expected(4);
  if (required) opt->required();
  cmd->add_option("--cell-m", cfg.cell_m, "Grid cell size in meters")->capture_default_str();
}

void add_time(CLI::App* cmd, rrg::cli::RunConfig& cfg) {
  cmd->add_option("--interval-s", cfg.interval_s, "Interval length in seconds")
      ->capture_default_str();
  cmd->add_option_function<std::int64_t>("--t0", [&cfg](std::int64_t v) { cfg.t0 = v; },
                                         "Series start (epoch seconds)");
  cmd->add_option_function<std::int64_t>("--t1", [&cfg](std::int64_t v) { cfg.t1 = v; },
                                         "Series end, exclusive (epoch seconds)");
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  rrg::cli::RunConfig cfg;

  CLI::App app{"Ride request graph toolkit"};
  app.require_subcommand(1);

  auto* build = app.add_subcommand("build-rrg", "Snapshot series of ride request graphs");
  build->add_option("--rides", cfg.rides_path, "Rides CSV")->required();
  add_bbox(build, cfg, false);
  add_time(build, cfg);
  build->add_option("--out-dir", cfg.out_dir, "Output directory")->capture_default_str();
  build->add_flag("--dump-graphs", cfg.dump_graphs, "Also write per-interval edges to graphs.csv");

  auto* fit = app.add_subcommand("fit-dpl", "Fit the densification power law");
  fit->add_option("--snapshots", cfg.snapshots_path,
                  "Snapshot stats CSV (default <out-dir>/snapshots.csv)");
  fit->add_option("--out-dir", cfg.out_dir, "Output directory")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Synthesize ride requests");
  synth->add_option("--pois", cfg.pois_path, "PoI CSV (lat,lon or lat,lon,count)")->required();
  synth->add_option("--rides", cfg.rides_path,
                    "Historical rides CSV; its active cells form the node subset");
  add_bbox(synth, cfg, true);
  add_time(synth, cfg);
  synth->add_option("--intervals", cfg.n_intervals, "Number of intervals")->capture_default_str();
  synth->add_option_function<double>("--p", [&cfg](double v) { cfg.p = v; },
                                     "Probability of an unvisited destination");
  synth->add_option_function<double>("--q", [&cfg](double v) { cfg.q = v; },
                                     "Geometric outlink success probability");
  synth->add_option_function<double>("--target-alpha", [&cfg](double v) { cfg.target_alpha = v; },
                                     "Calibrate (p, q) to this densification factor");
  synth->add_option("--m-profile", cfg.m_profile, "Points per interval: const:N | loguniform:lo,hi")
      ->capture_default_str();
  synth->add_option_function<std::uint64_t>("--seed", [&cfg](std::uint64_t v) { cfg.seed = v; },
                                            "Run seed (required)");
  synth->add_option_function<std::uint32_t>("--max-s", [&cfg](std::uint32_t v) { cfg.max_s = v; },
                                            "Random walk step cap (default 5)");
  synth->add_option_function<double>("--max-r", [&cfg](double v) { cfg.max_r = v; },
                                     "Random walk reward cap (default 3 x p90 density)");
  synth->add_option("--budget", cfg.budget, "Calibration trial budget")->capture_default_str();
  synth->add_option("--out-dir", cfg.out_dir, "Output directory")->capture_default_str();
  synth->add_flag("--dump-points", cfg.dump_points, "Also write generated points to points.csv");

  auto* pool = app.add_subcommand("poolability", "Ride poolability series");
  pool->add_option("--rides", cfg.rides_path, "Rides CSV")->required();
  add_time(pool, cfg);
  pool->add_option("--dt-s", cfg.pooling.dt_s, "Time window in seconds")->capture_default_str();
  pool->add_option("--ds-m", cfg.pooling.ds_m, "Source radius in meters")->capture_default_str();
  pool->add_option("--dd-m", cfg.pooling.dd_m, "Destination radius in meters")
      ->capture_default_str();
  pool->add_option("--compare", cfg.compare_path, "Poolability CSV to compare against (RMSE)");
  pool->add_flag("--whole", cfg.whole_dataset, "Pool across interval boundaries");
  pool->add_flag("--dump-groups", cfg.dump_groups, "Also write pool groups to groups.json");
  pool->add_option("--out-dir", cfg.out_dir, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : rrg::cli::kUsage;
  }

  if (build->parsed()) return rrg::cli::cmd_build_rrg(cfg);
  if (fit->parsed()) return rrg::cli::cmd_fit_dpl(cfg);
  if (synth->parsed()) return rrg::cli::cmd_synth(cfg);
  return rrg::cli::cmd_poolability(cfg);
}
