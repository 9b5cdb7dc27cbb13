#pragma once

// Operator sessions over live scenario worlds: state snapshots, failure
// injection, what-if previews on cloned state, committed reconfigurations and
// an ordered event feed.

#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rescov/coordination.hpp"
#include "rescov/coverage.hpp"
#include "rescov/error.hpp"
#include "rescov/scenario.hpp"

namespace rescov {

enum class SessionState { kIdle, kRunning, kAwaitingOperator, kFinished };

inline std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::kIdle: return "idle";
    case SessionState::kRunning: return "running";
    case SessionState::kAwaitingOperator: return "awaiting_operator";
    case SessionState::kFinished: return "finished";
  }
  return "unknown";
}

/// Per-cell detection probability 1 - prod(1 - P_i), row-major.
inline std::vector<double> coverage_heatmap(const Placement& placement, const SpecMap& specs, const Grid& grid) {
  CoverageCache cache(grid, placement, specs);
  std::vector<double> heat(grid.size());
  for (CellIndex w = 0; w < grid.size(); ++w) heat[w] = 1.0 - cache.miss(w);
  return heat;
}

struct EventBatch {
  std::vector<LogEvent> events;
  SessionState state = SessionState::kIdle;
};

class Session {
 public:
  Session(std::string id, ScenarioWorld world, RunLog log)
      : id_(std::move(id)), world_(std::move(world)), log_(std::move(log)) {}

  const std::string& id() const { return id_; }

  SessionState state() const {
    std::lock_guard lock(mutex_);
    return state_;
  }

  nlohmann::json snapshot() const {
    std::lock_guard lock(mutex_);
    return snapshot_locked();
  }

  FailureEvent inject_failure(std::optional<RobotId> robot, std::optional<double> time) {
    std::lock_guard lock(mutex_);
    if (state_ == SessionState::kAwaitingOperator) {
      throw Error(Errc::kConflict, "a failure is already awaiting the operator");
    }
    if (state_ == SessionState::kFinished) throw Error(Errc::kConflict, "session is finished");
    FailureEvent ev = world_.inject(robot, time, log_);
    state_ = SessionState::kAwaitingOperator;
    changed_.notify_all();
    return ev;
  }

  /// Runs the decision on a copy of the world; the session is left untouched.
  nlohmann::json preview(double L, double gamma) const {
    std::optional<ScenarioWorld> clone;
    {
      std::lock_guard lock(mutex_);
      if (state_ != SessionState::kAwaitingOperator) {
        throw Error(Errc::kNoPendingFailure, "no failure awaiting a decision");
      }
      clone.emplace(world_);
    }
    CoordinationResult res = clone->plan(L, gamma);
    const Grid& grid = clone->grid();
    auto now = coverage_heatmap(clone->placement(), clone->specs(), grid);
    auto next = coverage_heatmap(res.new_placement, clone->specs(), grid);
    std::vector<double> delta(grid.size());
    for (CellIndex w = 0; w < grid.size(); ++w) delta[w] = next[w] - now[w];
    const auto& pending = *clone->pending();
    return {{"failed_id", res.failed_id},
            {"L", L},
            {"gamma", gamma},
            {"center", pending.before.at(res.failed_id).position},
            {"ratio_after_local", res.ratio_achieved},
            {"ratio_after_augment", res.ratio_after_augment ? nlohmann::json(*res.ratio_after_augment)
                                                           : nlohmann::json(nullptr)},
            {"satisfied", res.satisfied},
            {"robots_requested_count", res.requested_robots.ids.size()},
            {"coverage_map_delta", delta},
            {"estimated_eval_count", res.gain_evaluations},
            {"result", res}};
  }

  CoordinationResult commit(double L, double gamma) {
    std::lock_guard lock(mutex_);
    if (state_ != SessionState::kAwaitingOperator) {
      throw Error(Errc::kNoPendingFailure, "no failure awaiting a decision");
    }
    CoordinationResult res = world_.commit(L, gamma, log_);
    state_ = SessionState::kRunning;
    changed_.notify_all();
    return res;
  }

  void finish() {
    std::lock_guard lock(mutex_);
    if (state_ == SessionState::kAwaitingOperator) {
      throw Error(Errc::kConflict, "a failure is still awaiting the operator");
    }
    if (state_ == SessionState::kFinished) throw Error(Errc::kConflict, "session is already finished");
    world_.finish(log_);
    state_ = SessionState::kFinished;
    changed_.notify_all();
  }

  /// Events with seq >= from. Blocks up to `timeout` when none are available
  /// yet and the session is not finished.
  EventBatch wait_events(std::size_t from, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    changed_.wait_for(lock, timeout,
                      [&] { return log_.size() > from || state_ == SessionState::kFinished; });
    EventBatch batch;
    batch.state = state_;
    const auto& all = log_.events();
    for (std::size_t k = from; k < all.size(); ++k) batch.events.push_back(all[k]);
    return batch;
  }

  std::vector<LogEvent> events() const {
    std::lock_guard lock(mutex_);
    return log_.events();
  }

  std::string ndjson() const {
    std::lock_guard lock(mutex_);
    return log_.to_ndjson();
  }

  Grid grid() const {
    std::lock_guard lock(mutex_);
    return world_.grid();
  }

 private:
  nlohmann::json snapshot_locked() const {
    const Grid& grid = world_.grid();
    const SpecMap& specs = world_.specs();
    nlohmann::json robots = nlohmann::json::array();
    nlohmann::json robot_specs = nlohmann::json::array();
    for (const auto& [id, t] : world_.activated_at()) {
      nlohmann::json r = {{"id", id}, {"activated_at", t}};
      if (world_.placement().contains(id)) {
        const auto& slot = world_.placement().at(id);
        r.update({{"cell", slot.cell}, {"position", slot.position}, {"active", true}, {"failed", false}});
      } else {
        r.update({{"cell", nullptr},
                  {"position", world_.failed_positions().at(id)},
                  {"active", false},
                  {"failed", true}});
      }
      robots.push_back(r);
      robot_specs.push_back(specs.at(id));
    }
    nlohmann::json pending = nullptr;
    if (world_.pending()) {
      const auto& p = *world_.pending();
      pending = {{"robot_id", p.event.robot_id},
                 {"time", p.event.time},
                 {"position", p.before.at(p.event.robot_id).position}};
    }
    return {{"session_id", id_},
            {"state", to_string(state_)},
            {"clock", world_.clock()},
            {"horizon", world_.config().horizon},
            {"coverage", world_.coverage()},
            {"grid",
             {{"origin", grid.origin()}, {"cell_size", grid.cell_size()}, {"nx", grid.nx()}, {"ny", grid.ny()}}},
            {"weights", std::vector<double>(grid.weights().begin(), grid.weights().end())},
            {"heatmap", coverage_heatmap(world_.placement(), specs, grid)},
            {"robots", robots},
            {"specs", robot_specs},
            {"failures", world_.failed().size()},
            {"pool_available", world_.available().size()},
            {"pending", pending},
            {"event_count", log_.size()}};
  }

  std::string id_;
  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  ScenarioWorld world_;
  RunLog log_;
  SessionState state_ = SessionState::kIdle;
};

class SessionManager {
 public:
  /// Builds the world (selection and initial placement) and registers it.
  std::string create_session(const ScenarioConfig& config) {
    RunLog log;
    ScenarioWorld world = ScenarioWorld::create(config, log);
    std::lock_guard lock(mutex_);
    std::string id = "s" + std::to_string(++counter_);
    sessions_.emplace(id, std::make_shared<Session>(id, std::move(world), std::move(log)));
    return id;
  }

  std::shared_ptr<Session> get(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(Errc::kNotFound, "unknown session " + id);
    return it->second;
  }

  std::vector<std::string> ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, s] : sessions_) out.push_back(id);
    return out;
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::size_t counter_ = 0;
};

}  // namespace rescov
