#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "rescov/reliability.hpp"
#include "test_support.hpp"

namespace rescov {
namespace {

const double kInvE = std::exp(-1.0);

TEST(Reliability, ZeroHazardNeverFails) {
  RobotSpec r = make_robot(1, 1, 1, 0, 0, 0);
  EXPECT_EQ(reliability(r, 0, 1e6), 1.0);
  EXPECT_EQ(reliability(r, 17, 42), 1.0);
  EXPECT_EQ(failure_probability(r, 0, 1e6), 0.0);
}

TEST(Reliability, ConstantHazardClosedForm) {
  RobotSpec r = make_robot(1, 1, 1, 0, 0.01, 0);
  EXPECT_NEAR(reliability(r, 0, 100), kInvE, 1e-12);
  EXPECT_NEAR(failure_probability(r, 0, 100), 1 - kInvE, 1e-12);
}

TEST(Reliability, QuadraticHazardClosedForm) {
  RobotSpec r = make_robot(1, 1, 1, 0, 0, 3e-6);
  EXPECT_NEAR(reliability(r, 0, 100), kInvE, 1e-12);
}

TEST(Reliability, RejectsBadIntervals) {
  RobotSpec r = make_robot(1, 1, 1, 0, 0.01, 0);
  EXPECT_ERRC(reliability(r, 5, 4), Errc::kInvalidInterval);
  EXPECT_ERRC(reliability(r, -1, 4), Errc::kInvalidInterval);
}

TEST(ReliabilityProperty, SemigroupOverAdjacentIntervals) {
  Rng rng(3);
  for (int k = 0; k < 500; ++k) {
    RobotSpec r = testing::random_robot(rng, 1);
    double a = testing::uniform(rng, 0, 100), b = a + testing::uniform(rng, 0, 100), c = b + testing::uniform(rng, 0, 100);
    EXPECT_NEAR(reliability(r, a, c), reliability(r, a, b) * reliability(r, b, c), 1e-12);
    EXPECT_LE(reliability(r, a, c), reliability(r, a, b) + 1e-15);
    EXPECT_NEAR(reliability(r, a, b) + failure_probability(r, a, b), 1.0, 1e-12);
  }
}

TEST(TeamFailure, EmptyTeamIsOne) { EXPECT_EQ(team_failure_probability({}, 0, 10), 1.0); }

TEST(TeamFailure, ProductOfMembers) {
  // lambda0 = ln 2 / 10 gives failure probability 1/2 over [0, 10].
  RobotSpec half = make_robot(1, 1, 1, 0, std::log(2.0) / 10.0, 0);
  std::vector<RobotSpec> team{half, half};
  EXPECT_NEAR(team_failure_probability(team, 0, 10), 0.25, 1e-12);
  team.push_back(make_robot(3, 1, 1, 0, 0, 0));
  EXPECT_EQ(team_failure_probability(team, 0, 10), 0.0);
}

TEST(FitHazard, Lifespan420) {
  HazardFit f = fit_hazard(420);
  EXPECT_NEAR(f.base, 2.381e-4, 1e-7);
  EXPECT_NEAR(f.quad, 3.645e-8, 1e-11);
  RobotSpec r = make_robot(1, 1, 1, 0, f.base, f.quad);
  EXPECT_NEAR(reliability(r, 0, 420), kInvE, 1e-9);
}

TEST(FitHazard, UnitLifespan) {
  HazardFit f = fit_hazard(1);
  EXPECT_NEAR(f.base, 0.1, 1e-15);
  EXPECT_NEAR(f.quad, 2.7, 1e-12);
  EXPECT_NEAR(reliability(make_robot(1, 1, 1, 0, f.base, f.quad), 0, 1), kInvE, 1e-12);
  EXPECT_ERRC(fit_hazard(0), Errc::kInvalidArgument);
}

TEST(FitHazardProperty, LifespanIsOneOverESurvival) {
  Rng rng(8);
  for (int k = 0; k < 200; ++k) {
    double ell = testing::uniform(rng, 1, 2000);
    HazardFit f = fit_hazard(ell);
    // Independent solve of lambda0*ell + k*ell^3/3 = 1 for k.
    double k_expected = (1.0 - 0.1) * 3.0 / (ell * ell * ell);
    EXPECT_NEAR(f.quad / k_expected, 1.0, 1e-12);
    EXPECT_NEAR(reliability(make_robot(1, 1, 1, 0, f.base, f.quad), 0, ell), kInvE, 1e-9);
  }
}

std::map<RobotId, int> draw_counts(const std::vector<ActiveRobot>& active, int draws, std::uint64_t seed) {
  Rng rng(seed);
  std::map<RobotId, int> counts;
  for (int k = 0; k < draws; ++k) ++counts[sample_failure(active, 100.0, rng).robot_id];
  return counts;
}

TEST(SampleFailure, SingleRobotAlwaysChosen) {
  std::vector<ActiveRobot> active{{make_robot(4, 1, 1, 0, 0.01, 0), 0.0}};
  Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    FailureEvent e = sample_failure(active, 100, rng);
    EXPECT_EQ(e.robot_id, 4);
    EXPECT_GT(e.time, 0.0);
    EXPECT_LT(e.time, 100.0);
  }
}

TEST(SampleFailure, IdenticalRobotsSplitEvenly) {
  RobotSpec a = make_robot(1, 1, 1, 0, 0.01, 0), b = a;
  b.id = 2;
  auto counts = draw_counts({{a, 0}, {b, 0}}, 10000, 99);
  EXPECT_NEAR(counts[1] / 1e4, 0.5, 0.02);
  EXPECT_NEAR(counts[2] / 1e4, 0.5, 0.02);
}

TEST(SampleFailure, ThreeToOneRatio) {
  // Failure probabilities 0.75 and 0.25 at t = 10.
  RobotSpec a = make_robot(1, 1, 1, 0, -std::log(1 - 0.75) / 10.0, 0);
  RobotSpec b = make_robot(2, 1, 1, 0, -std::log(1 - 0.25) / 10.0, 0);
  std::vector<ActiveRobot> active{{a, 0}, {b, 0}};
  Rng rng(2024);
  int first = 0;
  for (int k = 0; k < 10000; ++k) first += sample_failure_at(active, 10.0, rng).robot_id == 1;
  EXPECT_NEAR(first / 1e4, 0.75, 0.02);
}

TEST(SampleFailure, ZeroHazardPoolThrows) {
  std::vector<ActiveRobot> active{{make_robot(1, 1, 1, 0, 0, 0), 0.0}};
  Rng rng(1);
  EXPECT_ERRC(sample_failure(active, 100, rng), Errc::kAllWeightsZero);
  EXPECT_ERRC(sample_failure({}, 100, rng), Errc::kInvalidArgument);
  EXPECT_ERRC(sample_failure(active, 0, rng), Errc::kInvalidInterval);
}

TEST(SampleFailure, RespectsLowerBoundAndSeed) {
  std::vector<ActiveRobot> active;
  Rng g(5);
  for (int k = 0; k < 5; ++k) active.push_back({testing::random_robot(g, k + 1), testing::uniform(g, 0, 50)});
  Rng r1(77), r2(77);
  for (int k = 0; k < 200; ++k) {
    FailureEvent a = sample_failure(active, 300, r1, 120);
    FailureEvent b = sample_failure(active, 300, r2, 120);
    EXPECT_EQ(a, b);
    EXPECT_GT(a.time, 120);
    EXPECT_LT(a.time, 300);
  }
}

TEST(RouletteWeights, UseAgeSinceActivation) {
  RobotSpec r = make_robot(1, 1, 1, 0, 0.01, 1e-6);
  std::vector<ActiveRobot> active{{r, 0}, {r, 40}, {r, 200}};
  auto w = roulette_weights(active, 100);
  EXPECT_NEAR(w[0], failure_probability(r, 0, 100), 1e-15);
  EXPECT_NEAR(w[1], failure_probability(r, 0, 60), 1e-15);
  EXPECT_EQ(w[2], 0.0);
}

TEST(RobotSpecJson, RoundTripsAndValidates) {
  RobotSpec r = make_robot(7, 12.5, 2.0, 0.35, 1e-3, 1e-7, 410);
  nlohmann::json j = r;
  EXPECT_EQ(j.get<RobotSpec>(), r);
  j["cost"] = -1;
  EXPECT_ERRC(j.get<RobotSpec>(), Errc::kInvalidArgument);
  nlohmann::json k = {{"id", 1}, {"cost", 1}, {"sense_radius", 2}};
  EXPECT_NEAR(k.get<RobotSpec>().sense_area, 4 * std::numbers::pi, 1e-12);
}

}  // namespace
}  // namespace rescov
