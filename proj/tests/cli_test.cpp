#include <gtest/gtest.h>

#include <json.hpp>

#include "rrg/cli.hpp"
#include "rrg/io.hpp"
#include "support/cli_runner.hpp"

namespace rrg {
namespace {

using testing::CliRunner;
using testing::slurp;
using testing::spit;

CliRunner runner(const std::string& name) {
  return CliRunner(RRG_CLI_PATH, std::filesystem::path(RRG_TEST_TMP) / name);
}

std::string ride_rows(int count, int bad_row = 0, const std::string& bad = "") {
  std::string s = std::string(io::kRidesHeader) + "\n";
  for (int row = 1; row <= count; ++row)
    s += row == bad_row ? bad + "\n"
                        : fmt::format("r{},{},37.7{:03d}0,-122.45000,37.72000,-122.4{:03d}0\n", row,
                                      1459468800 + 37 * row, row % 50, row % 70);
  return s;
}

TEST(Cli, BuildRrgWritesSnapshots) {
  const auto c = runner("build_ok");
  spit(c.path("rides.csv"), ride_rows(40));
  const auto r = c.run(fmt::format("build-rrg --rides {} --out-dir {} --dump-graphs",
                                   c.path("rides.csv").string(), c.dir().string()));
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(c.path("snapshots.csv"));
  const auto stats = io::read_snapshots(in);
  std::size_t rides = 0;
  for (const auto& s : stats) rides += s.rides;
  EXPECT_EQ(rides, 40u);
  EXPECT_EQ(stats.front().start_epoch % 300, 0);
  EXPECT_TRUE(std::filesystem::exists(c.path("graphs.csv")));
}

TEST(Cli, MalformedRowIsReported) {
  const auto c = runner("build_bad");
  spit(c.path("rides.csv"), ride_rows(30, 17, "r17,not-a-time,37.7,-122.4,37.7,-122.4"));
  const auto r = c.run(fmt::format("build-rrg --rides {} --out-dir {}", c.path("rides.csv").string(),
                                   c.dir().string()));
  EXPECT_EQ(r.code, cli::kSchema);
  EXPECT_NE(r.err.find("row 17"), std::string::npos) << r.err;
  EXPECT_FALSE(std::filesystem::exists(c.path("snapshots.csv")));
}

TEST(Cli, EmptyDatasetExitsThree) {
  const auto c = runner("build_empty");
  spit(c.path("rides.csv"), ride_rows(0));
  EXPECT_EQ(c.run(fmt::format("build-rrg --rides {} --out-dir {}", c.path("rides.csv").string(),
                              c.dir().string())).code,
            cli::kEmpty);
  EXPECT_EQ(c.run(fmt::format("poolability --rides {} --out-dir {}", c.path("rides.csv").string(),
                              c.dir().string())).code,
            cli::kEmpty);
  // every ride outside the given box
  spit(c.path("far.csv"), ride_rows(5));
  EXPECT_EQ(c.run(fmt::format("build-rrg --rides {} --bbox 10,10,10.1,10.1 --out-dir {}",
                              c.path("far.csv").string(), c.dir().string())).code,
            cli::kEmpty);
}

TEST(Cli, UsageErrors) {
  const auto c = runner("usage");
  EXPECT_EQ(c.run("").code, cli::kUsage);
  EXPECT_EQ(c.run("frobnicate").code, cli::kUsage);
  EXPECT_EQ(c.run("build-rrg").code, cli::kUsage);
  EXPECT_EQ(c.run(fmt::format("build-rrg --rides {}", c.path("missing.csv").string())).code, cli::kSchema);
}

TEST(Cli, FitDplOnExactPowerLaw) {
  const auto c = runner("fit");
  std::string snaps = std::string(io::kSnapshotsHeader) + "\n";
  int k = 0;
  for (int n : {10, 20, 40, 80, 160})
    snaps += fmt::format("{},{},{},{},{},0\n", k++, 300 * k, n,
                         static_cast<long>(std::llround(3.0 * std::pow(n, 1.5))), 5 * n);
  snaps += fmt::format("{},{},0,0,0,0\n", k, 300 * k);
  spit(c.path("snapshots.csv"), snaps);
  const auto r = c.run(fmt::format("fit-dpl --out-dir {}", c.dir().string()));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(c.path("dpl.json")));
  EXPECT_NEAR(j["alpha"].get<double>(), 1.5, 1e-3);
  EXPECT_NEAR(j["r_squared"].get<double>(), 1.0, 1e-6);
  EXPECT_EQ(j["points_used"].get<int>(), 5);
  EXPECT_EQ(j["excluded"].get<int>(), 1);
  const std::string plot = slurp(c.path("dpl_plot.csv"));
  EXPECT_EQ(plot.substr(0, plot.find('\n')), "n,e,e_fit");
  EXPECT_EQ(std::count(plot.begin(), plot.end(), '\n'), 6);
}

TEST(Cli, FitDplNeedsTwoPoints) {
  const auto c = runner("fit_short");
  spit(c.path("s.csv"), std::string(io::kSnapshotsHeader) + "\n0,0,5,6,6,0\n1,300,0,0,0,0\n");
  EXPECT_EQ(c.run(fmt::format("fit-dpl --snapshots {} --out-dir {}", c.path("s.csv").string(),
                              c.dir().string())).code,
            cli::kFit);
}

class CliSynth : public ::testing::Test {
 protected:
  void SetUp() override {
    c_ = std::make_unique<CliRunner>(runner(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    bbox_ = testing::write_city_pois(c_->path("pois.csv"), testing::CityProfile::small());
  }
  std::string synth(const std::string& out, const std::string& extra) const {
    return fmt::format("synth --pois {} --bbox {} --out-dir {} {}", c_->path("pois.csv").string(), bbox_,
                       c_->path(out).string(), extra);
  }
  std::unique_ptr<CliRunner> c_;
  std::string bbox_;
};

TEST_F(CliSynth, SeedIsRequired) {
  EXPECT_EQ(c_->run(synth("o", "--p 0.5 --q 0.5")).code, cli::kUsage);
  EXPECT_EQ(c_->run(synth("o", "--seed 1")).code, cli::kUsage);
  EXPECT_EQ(c_->run(synth("o", "--seed 1 --p 1.5 --q 0.5")).code, cli::kUsage);
  EXPECT_EQ(c_->run(synth("o", "--seed 1 --target-alpha 2.5")).code, cli::kUsage);
  EXPECT_EQ(c_->run(synth("o", "--seed 1 --p 0.5 --q 0.5 --m-profile uniform:3")).code, cli::kUsage);
}

TEST_F(CliSynth, ZeroMassPoisExitFive) {
  spit(c_->path("pois.csv"), "lat,lon,count\n37.75,-122.45,0\n");
  EXPECT_EQ(c_->run(synth("o", "--seed 1 --p 0.5 --q 0.5")).code, cli::kPrior);
  // PoIs exist but none in the historically active cells
  spit(c_->path("pois.csv"), "lat,lon\n37.705,-122.515\n");
  spit(c_->path("hist.csv"), ride_rows(10));
  EXPECT_EQ(c_->run(synth("o", "--seed 1 --p 0.5 --q 0.5 --rides " + c_->path("hist.csv").string())).code,
            cli::kPrior);
}

TEST_F(CliSynth, ZeroVolumeGivesEmptyRides) {
  const auto r = c_->run(synth("o", "--seed 1 --p 0.5 --q 0.5 --m-profile const:0 --intervals 12"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(c_->path("o") / "rides.csv"), std::string(io::kRidesHeader) + "\n");
  EXPECT_NE(r.err.find("warn"), std::string::npos) << r.err;
}

TEST_F(CliSynth, DeterministicPerSeed) {
  const std::string args = "--p 0.4 --q 0.5 --intervals 40 --m-profile loguniform:20,400 --dump-points";
  ASSERT_EQ(c_->run(synth("a", "--seed 9 " + args)).code, 0);
  ASSERT_EQ(c_->run(synth("b", "--seed 9 " + args)).code, 0);
  ASSERT_EQ(c_->run(synth("c", "--seed 10 " + args)).code, 0);
  const auto a = slurp(c_->path("a") / "rides.csv");
  EXPECT_EQ(a, slurp(c_->path("b") / "rides.csv"));
  EXPECT_NE(a, slurp(c_->path("c") / "rides.csv"));
  EXPECT_EQ(slurp(c_->path("a") / "points.csv"), slurp(c_->path("b") / "points.csv"));

  // the output is valid input downstream and matches an in-process rebuild
  const auto rides = c_->path("a") / "rides.csv";
  ASSERT_EQ(c_->run(fmt::format("build-rrg --rides {} --bbox {} --t0 1459468800 --t1 {} --out-dir {}",
                                rides.string(), bbox_, 1459468800 + 40 * 300, c_->path("a").string()))
                .code,
            0);
  std::ifstream rin(rides);
  const auto parsed = io::read_rides(rin);
  const auto b = bbox_;
  double v[4];
  std::sscanf(b.c_str(), "%lf,%lf,%lf,%lf", &v[0], &v[1], &v[2], &v[3]);
  const GridSpec g = GridSpec::from_bbox({v[0], v[1]}, {v[2], v[3]}, 100.0);
  std::ostringstream expect;
  io::write_snapshots(expect, stats_of(snapshot_series(parsed, g, 300, 1459468800, 1459468800 + 40 * 300)));
  EXPECT_EQ(slurp(c_->path("a") / "snapshots.csv"), expect.str());
  ASSERT_EQ(c_->run(fmt::format("poolability --rides {} --out-dir {}", rides.string(), c_->path("a").string()))
                .code,
            0);
}

TEST(Cli, PoolabilitySelfCompareAndSingleRide) {
  const auto c = runner("pool");
  spit(c.path("rides.csv"), ride_rows(200));
  const std::string base =
      fmt::format("poolability --rides {} --out-dir {}", c.path("rides.csv").string(), c.dir().string());
  ASSERT_EQ(c.run(base + " --dump-groups").code, 0);
  std::filesystem::copy_file(c.path("poolability.csv"), c.path("ref.csv"));
  const auto r = c.run(base + " --compare " + c.path("ref.csv").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(c.path("poolability_summary.json")));
  EXPECT_EQ(j["compare"]["rmse"].get<double>(), 0.0);
  EXPECT_EQ(j["mode"], "per-interval");
  EXPECT_EQ(j["total_rides"].get<int>(), 200);
  EXPECT_TRUE(nlohmann::json::parse(slurp(c.path("groups.json"))).is_array());

  spit(c.path("one.csv"), ride_rows(1));
  ASSERT_EQ(c.run(fmt::format("poolability --rides {} --out-dir {}", c.path("one.csv").string(),
                              c.dir().string())).code,
            0);
  const auto s = nlohmann::json::parse(slurp(c.path("poolability_summary.json")));
  EXPECT_EQ(s["mean"].get<double>(), 0.0);
  EXPECT_EQ(s["intervals"].get<int>(), 1);

  spit(c.path("short.csv"), std::string(io::kPoolabilityHeader) + "\n0,0,1,0,0.0\n");
  EXPECT_EQ(c.run(base + " --compare " + c.path("short.csv").string()).code, cli::kSchema);
  EXPECT_EQ(c.run(base + " --ds-m 0").code, cli::kUsage);
}

}  // namespace
}  // namespace rrg
