#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "rrg/densify.hpp"
#include "support/stats.hpp"

namespace rrg {
namespace {

TEST(Geometric, DegenerateQ) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(geometric_outlinks(1.0, rng), 1u);
  EXPECT_THROW(geometric_outlinks(0.0, rng), InvalidArgument);
  EXPECT_THROW(geometric_outlinks(1.5, rng), InvalidArgument);
  EXPECT_THROW(geometric_outlinks(-0.1, rng), InvalidArgument);
}

TEST(Geometric, MeanIsInverseQ) {
  Rng rng(2);
  const int n = 1'000'000;
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    const auto k = geometric_outlinks(0.5, rng);
    ASSERT_GE(k, 1u);
    sum += static_cast<double>(k);
  }
  EXPECT_NEAR(sum / n, 2.0, 0.01);
}

TEST(Geometric, PmfMatchesShiftedGeometric) {
  Rng rng(3);
  const double q = 0.3;
  const int n = 200000;
  std::vector<double> observed(11, 0.0), expected(11, 0.0);  // k = 1..10, then tail
  for (int i = 0; i < n; ++i) {
    const auto k = geometric_outlinks(q, rng);
    observed[std::min<std::uint64_t>(k, 11) - 1] += 1;
  }
  for (int k = 1; k <= 10; ++k) expected[k - 1] = n * q * std::pow(1 - q, k - 1);
  expected[10] = n * std::pow(1 - q, 10);
  EXPECT_GT(testing::chi_square_pvalue(observed, expected), 0.001);
}

TEST(DensParams, Validation) {
  Rng rng(1);
  EXPECT_THROW(dens_prop_gen({10, -0.1, 0.5}, rng), InvalidArgument);
  EXPECT_THROW(dens_prop_gen({10, 1.1, 0.5}, rng), InvalidArgument);
  EXPECT_THROW(dens_prop_gen({10, 0.5, 0.0}, rng), InvalidArgument);
  EXPECT_TRUE(dens_prop_gen({0, 0.5, 0.5}, rng).empty());
  EXPECT_TRUE(dens_prop_gen({1, 0.5, 0.5}, rng).empty());
}

TEST(DensPropGen, SmallestInstance) {
  Rng rng(4);
  int src0 = 0;
  const int runs = 20000;
  for (int i = 0; i < runs; ++i) {
    const auto rides = dens_prop_gen({2, 1.0, 1.0}, rng);
    ASSERT_EQ(rides.size(), 1u);
    EXPECT_NE(rides[0].src_idx, rides[0].dst_idx);
    EXPECT_LT(rides[0].src_idx, 2u);
    EXPECT_LT(rides[0].dst_idx, 2u);
    src0 += rides[0].src_idx == 0;
  }
  EXPECT_NEAR(src0 / double(runs), 0.5, 3 * std::sqrt(0.25 / runs));
}

TEST(DensPropGen, PerfectMatchingWhenAlwaysUnvisited) {
  Rng rng(5);
  for (std::size_t m : {2, 3, 10, 11, 1000, 1001}) {
    const auto rides = dens_prop_gen({m, 1.0, 1.0}, rng);
    EXPECT_EQ(rides.size(), m / 2);
    std::set<std::uint32_t> seen;
    for (const auto& r : rides) {
      EXPECT_TRUE(seen.insert(r.src_idx).second);
      EXPECT_TRUE(seen.insert(r.dst_idx).second);
    }
  }
}

double indegree_variance(const std::vector<SynthRide>& rides, std::size_t m) {
  std::vector<double> deg(m, 0.0);
  for (const auto& r : rides) deg[r.dst_idx] += 1;
  double mean = 0;
  for (double d : deg) mean += d;
  mean /= double(m);
  double var = 0;
  for (double d : deg) var += (d - mean) * (d - mean);
  return var / double(m);
}

TEST(DensPropGen, RevisitingConcentratesInDegree) {
  const std::size_t m = 10000;
  Rng a(6), b(6);
  const double v_fresh = indegree_variance(dens_prop_gen({m, 1.0, 0.2}, a), m);
  const double v_revisit = indegree_variance(dens_prop_gen({m, 0.0, 0.2}, b), m);
  EXPECT_GT(v_revisit, 2.0 * v_fresh);
}

// Replays the consumption rules on the emitted list: sources are distinct,
// a destination is either a source whose edge loop already finished or a
// point consumed from the unvisited pool exactly once and never a source.
TEST(DensPropGen, PointConsumption) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const DensParams prm{2 + rng.index(300), rng.uniform(), rng.uniform(0.05, 1.0)};
    const auto rides = dens_prop_gen(prm, rng);
    std::set<std::uint32_t> all_sources;
    for (const auto& r : rides) all_sources.insert(r.src_idx);

    std::set<std::uint32_t> finished, consumed;
    std::size_t source_count = 0;
    std::uint32_t current = UINT32_MAX;
    for (const auto& r : rides) {
      ASSERT_LT(r.src_idx, prm.m);
      ASSERT_LT(r.dst_idx, prm.m);
      ASSERT_NE(r.src_idx, r.dst_idx);
      if (r.src_idx != current) {
        if (current != UINT32_MAX) finished.insert(current);
        ASSERT_FALSE(finished.count(r.src_idx)) << "source reused";
        ASSERT_FALSE(consumed.count(r.src_idx)) << "consumed point became a source";
        current = r.src_idx;
        ++source_count;
      }
      if (finished.count(r.dst_idx)) continue;
      ASSERT_FALSE(all_sources.count(r.dst_idx));
      ASSERT_TRUE(consumed.insert(r.dst_idx).second) << "unvisited point drawn twice";
    }
    EXPECT_GE(rides.size(), source_count);
    EXPECT_EQ(source_count, all_sources.size());
  }
}

TEST(DensPropGen, Deterministic) {
  Rng a(8), b(8);
  EXPECT_EQ(dens_prop_gen({500, 0.4, 0.3}, a), dens_prop_gen({500, 0.4, 0.3}, b));
}

GridSpec grid() {
  GridSpec g;
  g.origin = {1.29, 103.8};
  g.cell_size_m = 100.0;
  g.n_rows = 20;
  g.n_cols = 20;
  return g;
}

TEST(BindRides, EmptyAndRange) {
  Rng rng(9);
  EXPECT_TRUE(bind_rides({}, {}, 0, 300, rng).empty());
  const std::vector<GeoPoint> pts{{1.0, 1.0}, {1.001, 1.0}, {1.0, 1.001}};
  const std::vector<SynthRide> rides{{0, 1}, {1, 2}, {2, 0}, {0, 2}};
  std::set<std::int64_t> seen;
  for (int i = 0; i < 500; ++i) {
    const auto out = bind_rides(rides, pts, 600, 900, rng, "x");
    ASSERT_EQ(out.size(), 4u);
    for (std::size_t j = 0; j < out.size(); ++j) {
      EXPECT_GE(out[j].t, 600);
      EXPECT_LT(out[j].t, 900);
      EXPECT_EQ(out[j].id, "x" + std::to_string(j));
      EXPECT_EQ(out[j].src, pts[rides[j].src_idx]);
      EXPECT_EQ(out[j].dst, pts[rides[j].dst_idx]);
      seen.insert(out[j].t);
    }
  }
  EXPECT_GT(seen.size(), 250u);
  const std::vector<SynthRide> bad{{0, 3}};
  EXPECT_THROW(bind_rides(bad, pts, 0, 300, rng), IndexOutOfRange);
}

TEST(BindRides, GraphMatchesCellsOfChosenPoints) {
  const GridSpec g = grid();
  Rng rng(10);
  std::vector<GeoPoint> pts;
  for (int i = 0; i < 400; ++i)
    pts.push_back(unproject({rng.uniform(0, g.width_m()), rng.uniform(0, g.height_m())}, g.origin));
  const auto rides = dens_prop_gen({pts.size(), 0.5, 0.4}, rng);
  const auto bound = bind_rides(rides, pts, 0, 300, rng);
  std::map<CellPair, std::uint32_t> expected;
  for (const auto& r : rides) ++expected[{cell_of(pts[r.src_idx], g), cell_of(pts[r.dst_idx], g)}];
  EXPECT_EQ(build_rrg(bound, g).edges, expected);
}

}  // namespace
}  // namespace rrg
