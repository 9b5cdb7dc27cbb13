#include <gtest/gtest.h>

#include <thread>

#include "rescov/service.hpp"
#include "test_support.hpp"

namespace rescov {
namespace {

ScenarioConfig small_config() {
  ScenarioConfig c;
  c.seed = 5;
  c.pool_size = 20;
  c.bounds = {{0, 0}, {16, 16}};
  return c;
}

TEST(Session, FreshSnapshot) {
  SessionManager m;
  auto s = m.get(m.create_session(small_config()));
  auto snap = s->snapshot();
  EXPECT_EQ(snap.at("failures"), 0);
  EXPECT_EQ(snap.at("state"), "idle");
  EXPECT_TRUE(snap.at("pending").is_null());
  EXPECT_FALSE(snap.at("robots").empty());
  for (const auto& r : snap.at("robots")) EXPECT_TRUE(r.at("active").get<bool>());
  EXPECT_EQ(snap.at("event_count"), s->events().size());
}

TEST(Session, HeatmapWeightedSumEqualsCoverage) {
  SessionManager m;
  auto snap = m.get(m.create_session(small_config()))->snapshot();
  auto heat = snap.at("heatmap").get<std::vector<double>>();
  auto w = snap.at("weights").get<std::vector<double>>();
  ASSERT_EQ(heat.size(), w.size());
  double sum = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    EXPECT_GE(heat[k], 0.0);
    EXPECT_LE(heat[k], 1.0);
    sum += w[k] * heat[k];
  }
  EXPECT_NEAR(sum, snap.at("coverage").get<double>(), 1e-9);
}

TEST(SessionManager, UnknownIdIsNotFound) {
  SessionManager m;
  EXPECT_ERRC(m.get("nope"), Errc::kNotFound);
  auto a = m.create_session(small_config());
  auto b = m.create_session(small_config());
  EXPECT_NE(a, b);
  EXPECT_EQ(m.ids().size(), 2u);
}

TEST(Session, LifecycleRules) {
  SessionManager m;
  auto s = m.get(m.create_session(small_config()));
  EXPECT_ERRC(s->preview(5, 1), Errc::kNoPendingFailure);
  EXPECT_ERRC(s->commit(5, 1), Errc::kNoPendingFailure);
  s->inject_failure(std::nullopt, 100.0);
  EXPECT_EQ(s->state(), SessionState::kAwaitingOperator);
  EXPECT_ERRC(s->inject_failure(std::nullopt, 150.0), Errc::kConflict);
  EXPECT_ERRC(s->finish(), Errc::kConflict);
  s->commit(5, 1);
  EXPECT_EQ(s->state(), SessionState::kRunning);
  s->finish();
  EXPECT_EQ(s->state(), SessionState::kFinished);
  EXPECT_ERRC(s->finish(), Errc::kConflict);
  EXPECT_ERRC(s->inject_failure(std::nullopt, 200.0), Errc::kConflict);
  EXPECT_EQ(s->events().back().type, EventType::kCoverageSample);
}

TEST(Session, PreviewIsPureAndCommitMatchesIt) {
  SessionManager m;
  auto s = m.get(m.create_session(small_config()));
  s->inject_failure(std::nullopt, 120.0);
  auto before = s->snapshot();
  auto p1 = s->preview(6, 1);
  auto p2 = s->preview(6, 1);
  EXPECT_EQ(p1, p2);
  EXPECT_EQ(s->snapshot(), before);
  EXPECT_EQ(p1.at("coverage_map_delta").size(), before.at("weights").size());
  CoordinationResult done = s->commit(6, 1);
  EXPECT_EQ(nlohmann::json(done), p1.at("result"));
}

TEST(Session, PreviewGammaZeroRequestsNothingAndLargerLIsNoWorse) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    ScenarioConfig c = small_config();
    c.seed = seed;
    SessionManager m;
    auto s = m.get(m.create_session(c));
    s->inject_failure(std::nullopt, 100.0);
    EXPECT_EQ(s->preview(8, 0).at("robots_requested_count"), 0);
    double small = s->preview(0, 0).at("ratio_after_local").get<double>();
    double whole = s->preview(100, 0).at("ratio_after_local").get<double>();
    EXPECT_GE(whole, small - 1e-12);
  }
}

TEST(Session, WaitEventsWakesOnNewEvents) {
  SessionManager m;
  auto s = m.get(m.create_session(small_config()));
  std::size_t n = s->events().size();
  auto empty = s->wait_events(n, std::chrono::milliseconds(20));
  EXPECT_TRUE(empty.events.empty());
  std::thread t([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    s->inject_failure(std::nullopt, 50.0);
  });
  auto batch = s->wait_events(n, std::chrono::seconds(10));
  t.join();
  ASSERT_FALSE(batch.events.empty());
  EXPECT_EQ(batch.events.front().seq, n);
  EXPECT_EQ(batch.events.front().type, EventType::kFailureInjected);
}

TEST(Session, ReplayReconstructsSnapshotPlacement) {
  SessionManager m;
  auto s = m.get(m.create_session(small_config()));
  for (double t : {60.0, 180.0, 300.0}) {
    s->inject_failure(std::nullopt, t);
    s->commit(4, 1);
  }
  ReplayState st = replay_state(s->events(), s->grid());
  auto snap = s->snapshot();
  std::size_t active = 0;
  for (const auto& r : snap.at("robots")) {
    RobotId id = r.at("id");
    if (r.at("active").get<bool>()) {
      ++active;
      ASSERT_TRUE(st.placement.contains(id));
      EXPECT_EQ(st.placement.at(id).cell, r.at("cell").get<CellIndex>());
    } else {
      EXPECT_TRUE(st.failed.contains(id));
    }
  }
  EXPECT_EQ(active, st.placement.size());
  EXPECT_EQ(snap.at("failures"), 3);
  EXPECT_DOUBLE_EQ(st.clock, snap.at("clock").get<double>());
}

}  // namespace
}  // namespace rescov
