#include <gtest/gtest.h>

#include <cmath>

#include "rescov/placement.hpp"
#include "test_support.hpp"

namespace rescov {
namespace {

using testing::all_cells;
using testing::oracle_coverage;
using testing::pairs_of;

const double kGreedyBound = 1.0 - std::exp(-1.0);

Grid point_mass(std::size_t nx, std::size_t ny, CellIndex at) {
  std::vector<double> w(nx * ny, 0.0);
  w[at] = 1.0;
  return Grid({0, 0}, 1.0, nx, ny, w);
}

TEST(GreedyPlace, SingleRobotGoesToTheMass) {
  Grid g = point_mass(6, 6, 22);
  RobotSpec r = make_robot(1, 1, 1.5, 0.3, 0, 0);
  Placement p = greedy_place(std::vector<RobotSpec>{r}, g, CellSet::all(g), {}, {});
  EXPECT_EQ(p.at(1).cell, 22u);
}

TEST(GreedyPlace, ZeroGainTieBreakFillsLowestCellsByAscendingId) {
  // All mass sits outside the region, so every gain in the region is zero.
  Grid g = point_mass(10, 1, 9);
  std::vector<RobotSpec> team{make_robot(5, 1, 1.0, 0, 0, 0), make_robot(2, 1, 2.0, 0, 0, 0),
                              make_robot(7, 1, 0.5, 0, 0, 0)};
  CellSet region({2, 3, 4, 5}, g.size());
  GreedyStats st;
  Placement p = greedy_place(team, g, region, {}, {}, &st);
  EXPECT_EQ(p.at(2).cell, 2u);
  EXPECT_EQ(p.at(5).cell, 3u);
  EXPECT_EQ(p.at(7).cell, 4u);
  for (double gain : st.committed_gains) EXPECT_EQ(gain, 0.0);
  EXPECT_EQ(lazy_greedy_place(team, g, region, {}, {}), p);
}

TEST(GreedyPlace, TwoIdenticalRobotsOnThreeByThree) {
  Grid g = build_grid({{0, 0}, {3, 3}}, 1.0);
  std::vector<RobotSpec> team{make_robot(1, 1, 1.2, 0.5, 0, 0), make_robot(2, 1, 1.2, 0.5, 0, 0)};
  Placement p = greedy_place(team, g, CellSet::all(g), {}, {});
  double value = coverage(p, testing::spec_map(team), g, CellSet::all(g));
  double best = testing::oracle_best_placement(team, g, all_cells(g));
  EXPECT_GE(value, kGreedyBound * best);
  // Center first: it reaches the most cell centers.
  EXPECT_EQ(p.at(1).cell, 4u);
}

TEST(GreedyPlace, NotEnoughCells) {
  Grid g = build_grid({{0, 0}, {2, 1}}, 1.0);
  std::vector<RobotSpec> team{make_robot(1, 1, 1, 0, 0, 0), make_robot(2, 1, 1, 0, 0, 0)};
  RobotSpec blocker = make_robot(9, 1, 1, 0, 0, 0);
  Placement frozen;
  frozen.place(9, 0, g);
  EXPECT_ERRC(greedy_place(team, g, CellSet::all(g), frozen, testing::spec_map({blocker})), Errc::kNotEnoughCells);
  EXPECT_ERRC(lazy_greedy_place(team, g, CellSet::all(g), frozen, testing::spec_map({blocker})),
              Errc::kNotEnoughCells);
}

TEST(GreedyPlace, RejectsDuplicateIdsAndFrozenOverlap) {
  Grid g = build_grid({{0, 0}, {4, 4}}, 1.0);
  RobotSpec r = make_robot(1, 1, 1, 0, 0, 0);
  EXPECT_ERRC(greedy_place(std::vector<RobotSpec>{r, r}, g, CellSet::all(g), {}, {}), Errc::kInvalidArgument);
  Placement frozen;
  frozen.place(1, 0, g);
  EXPECT_ERRC(greedy_place(std::vector<RobotSpec>{r}, g, CellSet::all(g), frozen, testing::spec_map({r})),
              Errc::kInvalidArgument);
}

TEST(GreedyPlaceProperty, ApproximationAgainstBruteForce) {
  Rng rng(1234);
  for (int trial = 0; trial < 60; ++trial) {
    Grid g = testing::random_grid(rng, testing::uniform_int(rng, 2, 6), testing::uniform_int(rng, 2, 6));
    auto team = testing::random_team(rng, std::min<int>(testing::uniform_int(rng, 1, 3), g.size()));
    Placement p = greedy_place(team, g, CellSet::all(g), {}, {});
    double value = oracle_coverage(pairs_of(p, testing::spec_map(team)), g, all_cells(g));
    double best = testing::oracle_best_placement(team, g, all_cells(g));
    EXPECT_GE(value, (kGreedyBound - 1e-9) * best);
    EXPECT_LE(value, best + 1e-12);
  }
}

TEST(GreedyPlaceProperty, CommittedGainsAreRealizedAndNonIncreasing) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    Grid g = testing::random_grid(rng, 9, 8);
    auto team = testing::random_team(rng, 5);
    auto frozen_team = testing::random_team(rng, 2, 3.0, 100);
    Placement frozen = testing::random_placement(rng, g, frozen_team);
    SpecMap specs = testing::spec_map(team);
    for (const auto& r : frozen_team) specs[r.id] = r;
    std::vector<CellIndex> region;
    for (CellIndex w = 0; w < g.size(); ++w) {
      if (testing::uniform(rng, 0, 1) < 0.6) region.push_back(w);
    }
    CellSet cells(region, g.size());
    GreedyStats st;
    Placement out = greedy_place(team, g, cells, frozen, specs, &st);
    ASSERT_EQ(st.committed_gains.size(), team.size());
    for (std::size_t k = 1; k < st.committed_gains.size(); ++k) {
      EXPECT_LE(st.committed_gains[k], st.committed_gains[k - 1] + 1e-12);
    }
    double total = 0.0;
    for (double gain : st.committed_gains) total += gain;
    EXPECT_NEAR(coverage(out, specs, g, cells) - coverage(frozen, specs, g, cells), total, 1e-12);
    for (const auto& [id, slot] : frozen) EXPECT_EQ(out.at(id).cell, slot.cell);
    for (const RobotSpec& r : team) EXPECT_TRUE(cells.contains(out.at(r.id).cell));
    EXPECT_EQ(out.size(), team.size() + frozen.size());
  }
}

TEST(LazyGreedyProperty, IdenticalToNaiveGreedy) {
  Rng rng(4242);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t nx = testing::uniform_int(rng, 2, 10), ny = testing::uniform_int(rng, 2, 10);
    Grid g = testing::random_grid(rng, nx, ny);
    int n = std::min<int>(testing::uniform_int(rng, 1, 6), g.size());
    std::vector<RobotSpec> team;
    for (int k = 0; k < n; ++k) {
      // Mix of interchangeable and distinct robots.
      if (k > 0 && testing::uniform(rng, 0, 1) < 0.4) {
        RobotSpec c = team.back();
        c.id = k + 1;
        team.push_back(c);
      } else {
        team.push_back(testing::random_robot(rng, k + 1));
      }
    }
    CellSet cells = CellSet::all(g);
    GreedyStats naive_stats, lazy_stats;
    Placement naive = greedy_place(team, g, cells, {}, {}, &naive_stats);
    Placement lazy = lazy_greedy_place(team, g, cells, {}, {}, &lazy_stats);
    EXPECT_EQ(naive, lazy);
    EXPECT_EQ(naive_stats.committed_gains, lazy_stats.committed_gains);
  }
}

TEST(LazyGreedy, SingleCandidate) {
  Grid g = build_grid({{0, 0}, {1, 1}}, 1.0);
  std::vector<RobotSpec> team{make_robot(3, 1, 1, 0.1, 0, 0)};
  EXPECT_EQ(lazy_greedy_place(team, g, CellSet::all(g), {}, {}), greedy_place(team, g, CellSet::all(g), {}, {}));
}

TEST(LazyGreedy, FewerEvaluationsOnLargeInstance) {
  Rng rng(10);
  Grid g = testing::random_grid(rng, 20, 20);
  auto team = testing::random_team(rng, 10);
  GreedyStats naive_stats, lazy_stats;
  Placement naive = greedy_place(team, g, CellSet::all(g), {}, {}, &naive_stats);
  Placement lazy = lazy_greedy_place(team, g, CellSet::all(g), {}, {}, &lazy_stats);
  EXPECT_EQ(naive, lazy);
  EXPECT_LT(lazy_stats.gain_evaluations, naive_stats.gain_evaluations);
}

}  // namespace
}  // namespace rescov
