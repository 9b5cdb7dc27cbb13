#pragma once

// End-to-end orchestration: pool generation, initial selection and placement,
// failure injection, operator decisions, coordination, goal assignment, and a
// timestamped run log.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "rescov/assignment.hpp"
#include "rescov/coordination.hpp"
#include "rescov/coverage.hpp"
#include "rescov/error.hpp"
#include "rescov/placement.hpp"
#include "rescov/reliability.hpp"
#include "rescov/team_selection.hpp"
#include "rescov/world.hpp"

namespace rescov {

enum class OperatorMode { kScripted, kInteractive };

struct ScheduledFailure {
  double time = 0.0;
  std::optional<RobotId> robot_id;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  int pool_size = 50;
  double lifespan_mean = 420.0;
  double lifespan_std_fraction = 0.1;
  double max_cost = 50.0;
  double max_area = 200.0;
  double decay = 0.35;
  Rect bounds{{0.0, 0.0}, {30.0, 30.0}};
  double cell_size = 1.0;
  DensitySpec density = UniformDensity{};
  double horizon = 500.0;
  double beta = 500.0;
  double alpha = 0.3;
  double delta = 1.0;
  double L = 10.0;
  double gamma = 1.0;
  int failure_count = 1;
  std::vector<ScheduledFailure> failure_schedule;
  OperatorMode operator_mode = OperatorMode::kScripted;
  double detection_delay = 0.0;
  bool iterate_until_satisfied = false;
  double solver_time_limit_s = 5.0;
  double clearance = 0.3;

  void validate() const {
    if (pool_size < 1) throw Error(Errc::kInvalidArgument, "pool_size must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::kInvalidArgument, "alpha must lie in (0,1)");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(Errc::kInvalidArgument, "gamma must lie in [0,1]");
    if (!(delta > 0.0)) throw Error(Errc::kInvalidArgument, "delta must be positive");
    if (!(horizon > 0.0)) throw Error(Errc::kInvalidArgument, "horizon must be positive");
    if (!(L >= 0.0)) throw Error(Errc::kInvalidArgument, "L must be nonnegative");
    if (!(detection_delay >= 0.0)) throw Error(Errc::kInvalidArgument, "detection_delay must be >= 0");
    if (!(lifespan_mean > 0.0) || !(lifespan_std_fraction >= 0.0)) {
      throw Error(Errc::kInvalidArgument, "lifespan parameters out of range");
    }
    if (!(max_cost > 0.0) || !(max_area > 0.0) || !(decay >= 0.0)) {
      throw Error(Errc::kInvalidArgument, "robot generator parameters out of range");
    }
  }
};

inline void to_json(nlohmann::json& j, const ScenarioConfig& c) {
  nlohmann::json schedule = nlohmann::json::array();
  for (const auto& f : c.failure_schedule) {
    nlohmann::json e = {{"time", f.time}};
    if (f.robot_id) e["robot_id"] = *f.robot_id;
    schedule.push_back(e);
  }
  j = {{"seed", c.seed},
       {"pool_size", c.pool_size},
       {"lifespan_mean", c.lifespan_mean},
       {"lifespan_std_fraction", c.lifespan_std_fraction},
       {"max_cost", c.max_cost},
       {"max_area", c.max_area},
       {"decay", c.decay},
       {"bounds", c.bounds},
       {"cell_size", c.cell_size},
       {"density", c.density},
       {"horizon", c.horizon},
       {"beta", c.beta},
       {"alpha", c.alpha},
       {"delta", c.delta},
       {"L", c.L},
       {"gamma", c.gamma},
       {"failure_count", c.failure_count},
       {"failure_schedule", schedule},
       {"operator_mode", c.operator_mode == OperatorMode::kScripted ? "scripted" : "interactive"},
       {"detection_delay", c.detection_delay},
       {"iterate_until_satisfied", c.iterate_until_satisfied},
       {"solver_time_limit_s", c.solver_time_limit_s},
       {"clearance", c.clearance}};
}

/// Missing keys keep their defaults.
inline void from_json(const nlohmann::json& j, ScenarioConfig& c) {
  ScenarioConfig d;
  c.seed = j.value("seed", d.seed);
  c.pool_size = j.value("pool_size", d.pool_size);
  c.lifespan_mean = j.value("lifespan_mean", d.lifespan_mean);
  c.lifespan_std_fraction = j.value("lifespan_std_fraction", d.lifespan_std_fraction);
  c.max_cost = j.value("max_cost", d.max_cost);
  c.max_area = j.value("max_area", d.max_area);
  c.decay = j.value("decay", d.decay);
  c.bounds = j.contains("bounds") ? j.at("bounds").get<Rect>() : d.bounds;
  c.cell_size = j.value("cell_size", d.cell_size);
  c.density = j.contains("density") ? j.at("density").get<DensitySpec>() : d.density;
  c.horizon = j.value("horizon", d.horizon);
  c.beta = j.value("beta", d.beta);
  c.alpha = j.value("alpha", d.alpha);
  c.delta = j.value("delta", d.delta);
  c.L = j.value("L", d.L);
  c.gamma = j.value("gamma", d.gamma);
  c.failure_count = j.value("failure_count", d.failure_count);
  c.failure_schedule.clear();
  if (j.contains("failure_schedule")) {
    for (const auto& e : j.at("failure_schedule")) {
      ScheduledFailure f{e.at("time").get<double>(), std::nullopt};
      if (e.contains("robot_id") && !e.at("robot_id").is_null()) f.robot_id = e.at("robot_id").get<RobotId>();
      c.failure_schedule.push_back(f);
    }
  }
  std::string mode = j.value("operator_mode", std::string("scripted"));
  if (mode != "scripted" && mode != "interactive") {
    throw Error(Errc::kInvalidArgument, "operator_mode must be scripted or interactive");
  }
  c.operator_mode = mode == "scripted" ? OperatorMode::kScripted : OperatorMode::kInteractive;
  c.detection_delay = j.value("detection_delay", d.detection_delay);
  c.iterate_until_satisfied = j.value("iterate_until_satisfied", d.iterate_until_satisfied);
  c.solver_time_limit_s = j.value("solver_time_limit_s", d.solver_time_limit_s);
  c.clearance = j.value("clearance", d.clearance);
}

// ---------------------------------------------------------------------------
// Run log

enum class EventType {
  kPoolGenerated,
  kTeamSelected,
  kPlaced,
  kFailureInjected,
  kFailureDetected,
  kOperatorChoice,
  kReconfigured,
  kRobotsRequested,
  kAssignmentComputed,
  kCoverageSample,
  kError,
};

inline std::string_view to_string(EventType t) {
  switch (t) {
    case EventType::kPoolGenerated: return "PoolGenerated";
    case EventType::kTeamSelected: return "TeamSelected";
    case EventType::kPlaced: return "Placed";
    case EventType::kFailureInjected: return "FailureInjected";
    case EventType::kFailureDetected: return "FailureDetected";
    case EventType::kOperatorChoice: return "OperatorChoice";
    case EventType::kReconfigured: return "Reconfigured";
    case EventType::kRobotsRequested: return "RobotsRequested";
    case EventType::kAssignmentComputed: return "AssignmentComputed";
    case EventType::kCoverageSample: return "CoverageSample";
    case EventType::kError: return "Error";
  }
  return "Unknown";
}

struct LogEvent {
  std::size_t seq = 0;
  double time = 0.0;
  EventType type = EventType::kError;
  nlohmann::json payload;

  nlohmann::json to_json() const {
    return {{"seq", seq}, {"time", time}, {"type", to_string(type)}, {"payload", payload}};
  }
};

/// Append-only, time-ordered event record.
class RunLog {
 public:
  const LogEvent& append(double time, EventType type, nlohmann::json payload) {
    if (!events_.empty() && time < events_.back().time) {
      throw Error(Errc::kInvalidArgument, "run log timestamps must be non-decreasing");
    }
    events_.push_back({events_.size(), time, type, std::move(payload)});
    return events_.back();
  }

  const std::vector<LogEvent>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }

  std::size_t count(EventType type) const {
    return static_cast<std::size_t>(std::count_if(events_.begin(), events_.end(),
                                                  [&](const LogEvent& e) { return e.type == type; }));
  }

  std::string to_ndjson() const {
    std::string out;
    for (const auto& e : events_) {
      out += e.to_json().dump();
      out += '\n';
    }
    return out;
  }

 private:
  std::vector<LogEvent> events_;
};

// ---------------------------------------------------------------------------
// Pool generation

/// Heterogeneous pool: lifespans ~ Normal(mean, frac*mean) truncated below at
/// 0.2*mean (by resampling); cost and sensing area scale with lifespan relative
/// to the longest-lived robot. Ids run 1..pool_size.
inline std::vector<RobotSpec> generate_pool(const ScenarioConfig& config, Rng& rng) {
  if (config.pool_size < 1) throw Error(Errc::kInvalidArgument, "pool_size must be >= 1");
  std::normal_distribution<double> life(config.lifespan_mean,
                                        config.lifespan_std_fraction * config.lifespan_mean);
  const double floor = 0.2 * config.lifespan_mean;
  std::vector<double> lifespans(static_cast<std::size_t>(config.pool_size));
  for (double& l : lifespans) {
    do {
      l = life(rng);
    } while (l < floor);
  }
  const double longest = *std::max_element(lifespans.begin(), lifespans.end());
  std::vector<RobotSpec> pool;
  pool.reserve(lifespans.size());
  for (std::size_t k = 0; k < lifespans.size(); ++k) {
    double scale = lifespans[k] / longest;
    double area = config.max_area * scale;
    HazardFit fit = fit_hazard(lifespans[k]);
    RobotSpec r = make_robot(static_cast<RobotId>(k + 1), config.max_cost * scale,
                             std::sqrt(area / std::numbers::pi), config.decay, fit.base, fit.quad,
                             lifespans[k]);
    r.sense_area = area;
    pool.push_back(r);
  }
  return pool;
}

inline nlohmann::json pool_json(std::span<const RobotSpec> pool) {
  nlohmann::json j = nlohmann::json::array();
  for (const RobotSpec& r : pool) j.push_back(r);
  return j;
}

inline std::vector<RobotSpec> pool_from_json(const nlohmann::json& j) {
  std::vector<RobotSpec> pool;
  for (const auto& e : j) pool.push_back(e.get<RobotSpec>());
  return pool;
}

/// Lower median of the pool by lifespan.
inline RobotSpec median_spec(std::span<const RobotSpec> pool) {
  std::vector<RobotSpec> sorted(pool.begin(), pool.end());
  std::sort(sorted.begin(), sorted.end(), [](const RobotSpec& a, const RobotSpec& b) {
    return a.lifespan != b.lifespan ? a.lifespan < b.lifespan : a.id < b.id;
  });
  return sorted[(sorted.size() - 1) / 2];
}

// ---------------------------------------------------------------------------
// Live world

inline bool interchangeable(const RobotSpec& a, const RobotSpec& b) {
  RobotSpec x = a;
  x.id = b.id;
  return x == b;
}

struct PendingFailure {
  FailureEvent event;
  Placement before;  // placement at failure time, failed robot included
};

struct OperatorQuery {
  FailureEvent failure;
  double detected_at = 0.0;
};

struct OperatorDecision {
  double L = 0.0;
  double gamma = 0.0;
};

using OperatorCallback = std::function<OperatorDecision(const OperatorQuery&)>;

class ScenarioWorld {
 public:
  /// Generates the pool, selects and places the initial team, logging each step.
  /// Throws Error(kSelectionInfeasible) after logging an Error event.
  static ScenarioWorld create(const ScenarioConfig& config, RunLog& log) {
    config.validate();
    ScenarioWorld w(config);
    w.pool_ = generate_pool(config, w.rng_);
    for (const RobotSpec& r : w.pool_) w.specs_[r.id] = r;
    log.append(0.0, EventType::kPoolGenerated, {{"pool", pool_json(w.pool_)}});

    InitialSelectionParams sp{config.beta, config.alpha, config.delta, config.bounds.area(), config.horizon};
    IlpProblem ilp = build_initial_ilp(w.pool_, sp);
    w.initial_selection_ = solve_min_cardinality(ilp, {config.solver_time_limit_s});
    if (!w.initial_selection_.has_solution()) {
      log.append(0.0, EventType::kError,
                 {{"error", "SelectionInfeasible"},
                  {"status", to_string(w.initial_selection_.status)},
                  {"ilp", ilp}});
      throw Error(Errc::kSelectionInfeasible, "no team satisfies budget, reliability and area constraints");
    }
    log.append(0.0, EventType::kTeamSelected, {{"result", w.initial_selection_}});

    std::vector<RobotSpec> team;
    for (RobotId id : w.initial_selection_.selection.ids) {
      team.push_back(w.specs_.at(id));
      w.activated_at_[id] = 0.0;
    }
    for (const RobotSpec& r : w.pool_) {
      if (!w.activated_at_.contains(r.id)) w.available_.insert(r.id);
    }
    w.placement_ = lazy_greedy_place(team, w.grid_, CellSet::all(w.grid_), {}, w.specs_);
    log.append(0.0, EventType::kPlaced, {{"placement", w.placement_}});
    log.append(0.0, EventType::kCoverageSample, {{"coverage", w.coverage()}});
    return w;
  }

  const ScenarioConfig& config() const { return config_; }
  const Grid& grid() const { return grid_; }
  const std::vector<RobotSpec>& pool() const { return pool_; }
  const SpecMap& specs() const { return specs_; }
  const Placement& placement() const { return placement_; }
  const std::set<RobotId>& failed() const { return failed_; }
  const std::set<RobotId>& available() const { return available_; }
  const std::map<RobotId, double>& activated_at() const { return activated_at_; }
  const std::map<RobotId, Vec2>& failed_positions() const { return failed_positions_; }
  const SolveResult& initial_selection() const { return initial_selection_; }
  const std::optional<PendingFailure>& pending() const { return pending_; }
  double clock() const { return clock_; }
  Rng& rng() { return rng_; }

  double coverage() const { return rescov::coverage(placement_, specs_, grid_, CellSet::all(grid_)); }

  std::vector<ActiveRobot> active_robots() const {
    std::vector<ActiveRobot> out;
    for (const auto& [id, slot] : placement_) out.push_back({specs_.at(id), activated_at_.at(id)});
    return out;
  }

  /// Fails a robot. Without a robot id the roulette wheel picks one; without a
  /// time the instant is drawn uniformly in (clock, horizon).
  FailureEvent inject(std::optional<RobotId> robot, std::optional<double> time, RunLog& log) {
    if (pending_) throw Error(Errc::kConflict, "a failure is already awaiting the operator");
    if (placement_.empty()) throw Error(Errc::kConflict, "no active robots left");
    auto active = active_robots();
    FailureEvent ev;
    if (time) {
      if (!(*time > clock_ && *time < config_.horizon)) {
        throw Error(Errc::kInvalidInterval, "failure time must lie in (clock, horizon)");
      }
      ev = robot ? FailureEvent{*robot, *time} : sample_failure_at(active, *time, rng_);
    } else if (robot) {
      std::uniform_real_distribution<double> when(clock_, config_.horizon);
      double t = when(rng_);
      while (t <= clock_) t = when(rng_);
      ev = {*robot, t};
    } else {
      ev = sample_failure(active, config_.horizon, rng_, clock_);
    }
    if (!placement_.contains(ev.robot_id)) {
      throw Error(Errc::kUnknownRobot, "robot " + std::to_string(ev.robot_id) + " is not active");
    }
    double before = coverage();
    pending_ = PendingFailure{ev, placement_};
    failed_positions_[ev.robot_id] = placement_.at(ev.robot_id).position;
    placement_.remove(ev.robot_id);
    failed_.insert(ev.robot_id);
    clock_ = ev.time;
    log.append(ev.time, EventType::kFailureInjected,
               {{"robot_id", ev.robot_id},
                {"time", ev.time},
                {"position", failed_positions_[ev.robot_id]},
                {"coverage_before", before},
                {"coverage_after", coverage()}});
    log.append(ev.time, EventType::kCoverageSample, {{"coverage", coverage()}});
    return ev;
  }

  FleetView fleet_view() const {
    if (!pending_) throw Error(Errc::kNoPendingFailure, "no failure awaiting a decision");
    FleetView view;
    view.grid = &grid_;
    view.specs = &specs_;
    view.placement = pending_->before;
    for (const auto& [id, slot] : pending_->before) view.activated_at[id] = activated_at_.at(id);
    view.pool_available.assign(available_.begin(), available_.end());
    return view;
  }

  CoordinationParams coordination_params(double L, double gamma) const {
    CoordinationParams p;
    p.L = L;
    p.gamma = gamma;
    p.alpha = config_.alpha;
    p.failure_time = pending_ ? pending_->event.time : clock_;
    p.horizon = config_.horizon;
    p.iterate_until_satisfied = config_.iterate_until_satisfied;
    p.solver.time_limit_s = config_.solver_time_limit_s;
    return p;
  }

  /// What-if evaluation of a decision for the pending failure; no mutation.
  CoordinationResult plan(double L, double gamma) const {
    return reconfigure(fleet_view(), pending_->event.robot_id, coordination_params(L, gamma));
  }

  /// Applies a decision to the pending failure at detection time.
  CoordinationResult commit(double L, double gamma, RunLog& log) {
    if (!pending_) throw Error(Errc::kNoPendingFailure, "no failure awaiting a decision");
    const double t = std::min(pending_->event.time + config_.detection_delay, config_.horizon);
    CoordinationResult res = plan(L, gamma);
    log.append(t, EventType::kOperatorChoice, {{"robot_id", res.failed_id}, {"L", L}, {"gamma", gamma}});
    log.append(t, EventType::kReconfigured, {{"result", res}});
    if (!res.requested_robots.empty()) {
      nlohmann::json specs = nlohmann::json::array();
      for (RobotId id : res.requested_robots.ids) specs.push_back(specs_.at(id));
      log.append(t, EventType::kRobotsRequested, {{"ids", res.requested_robots.ids}, {"robots", specs}});
    }
    for (RobotId id : res.requested_robots.ids) {
      available_.erase(id);
      activated_at_[id] = t;
    }
    const Placement before = pending_->before;
    placement_ = res.new_placement;
    log.append(t, EventType::kAssignmentComputed, assign_moves(before));
    pending_.reset();
    clock_ = t;
    log.append(t, EventType::kCoverageSample, {{"coverage", coverage()}});
    return res;
  }

  void finish(RunLog& log) {
    if (pending_) throw Error(Errc::kConflict, "a failure is still awaiting the operator");
    clock_ = std::max(clock_, config_.horizon);
    log.append(clock_, EventType::kCoverageSample, {{"coverage", coverage()}, {"final", true}});
  }

 private:
  explicit ScenarioWorld(const ScenarioConfig& config)
      : config_(config),
        grid_(set_density(build_grid(config.bounds, config.cell_size), config.density)),
        rng_(config.seed) {}

  // Within each class of interchangeable moved robots, reassign goals to
  // minimize total travel, then check pairwise clearance over all robots that
  // were already flying.
  nlohmann::json assign_moves(const Placement& before) {
    std::vector<RobotId> movers;
    for (const auto& [id, slot] : placement_) {
      if (before.contains(id) && before.at(id).cell != slot.cell) movers.push_back(id);
    }
    std::vector<std::vector<RobotId>> groups;
    for (RobotId id : movers) {
      auto it = std::find_if(groups.begin(), groups.end(), [&](const std::vector<RobotId>& g) {
        return interchangeable(specs_.at(g.front()), specs_.at(id));
      });
      if (it == groups.end()) {
        groups.push_back({id});
      } else {
        it->push_back(id);
      }
    }
    nlohmann::json group_json = nlohmann::json::array();
    for (const auto& g : groups) {
      if (g.size() < 2) continue;
      std::vector<Vec2> starts, goals;
      std::vector<CellIndex> goal_cells;
      for (RobotId id : g) {
        starts.push_back(before.at(id).position);
        goals.push_back(placement_.at(id).position);
        goal_cells.push_back(placement_.at(id).cell);
      }
      Assignment a = assign_goals(starts, goals);
      for (RobotId id : g) placement_.remove(id);
      for (std::size_t k = 0; k < g.size(); ++k) placement_.place(g[k], goal_cells[a.goal_of[k]], grid_);
      group_json.push_back({{"robots", g}, {"assignment", a}});
    }

    std::vector<RobotId> flying;
    std::vector<Vec2> starts, goals;
    double travel = 0.0;
    for (const auto& [id, slot] : placement_) {
      if (!before.contains(id)) continue;
      flying.push_back(id);
      starts.push_back(before.at(id).position);
      goals.push_back(slot.position);
      travel += distance(starts.back(), goals.back());
    }
    nlohmann::json violations = nlohmann::json::array();
    if (!flying.empty()) {
      Assignment identity;
      identity.goal_of.resize(flying.size());
      std::iota(identity.goal_of.begin(), identity.goal_of.end(), std::size_t{0});
      for (const auto& v : check_clearance(starts, goals, identity, config_.clearance)) {
        violations.push_back({{"robots", {flying[v.first], flying[v.second]}},
                              {"min_distance", v.min_distance},
                              {"time", v.time}});
      }
    }
    return {{"moved", movers},
            {"groups", group_json},
            {"total_travel", travel},
            {"clearance", config_.clearance},
            {"violations", violations},
            {"placement", placement_}};
  }

  ScenarioConfig config_;
  Grid grid_;
  Rng rng_;
  std::vector<RobotSpec> pool_;
  SpecMap specs_;
  SolveResult initial_selection_;
  Placement placement_;
  std::map<RobotId, double> activated_at_;
  std::set<RobotId> available_;
  std::set<RobotId> failed_;
  std::map<RobotId, Vec2> failed_positions_;
  std::optional<PendingFailure> pending_;
  double clock_ = 0.0;
};

/// Executes a full scenario. Scripted mode answers every failure with the
/// config's (L, gamma); interactive mode asks `op`. Selection infeasibility
/// ends the log with an Error event.
inline RunLog run_scenario(const ScenarioConfig& config, const OperatorCallback& op = {}) {
  RunLog log;
  if (config.operator_mode == OperatorMode::kInteractive && !op) {
    throw Error(Errc::kInvalidArgument, "interactive mode needs an operator callback");
  }
  std::optional<ScenarioWorld> world;
  try {
    world.emplace(ScenarioWorld::create(config, log));
  } catch (const Error& e) {
    if (e.code() == Errc::kSelectionInfeasible) return log;
    throw;
  }
  const std::size_t failures =
      config.failure_schedule.empty() ? static_cast<std::size_t>(std::max(0, config.failure_count))
                                      : config.failure_schedule.size();
  for (std::size_t k = 0; k < failures; ++k) {
    if (world->placement().empty() || world->clock() >= config.horizon) break;
    FailureEvent ev;
    try {
      if (config.failure_schedule.empty()) {
        ev = world->inject(std::nullopt, std::nullopt, log);
      } else {
        const auto& s = config.failure_schedule[k];
        if (!(s.time > world->clock() && s.time < config.horizon)) {
          throw Error(Errc::kInvalidInterval, "scheduled failures must be increasing inside the horizon");
        }
        ev = world->inject(s.robot_id, s.time, log);
      }
    } catch (const Error& e) {
      if (e.code() == Errc::kAllWeightsZero) break;  // nothing can fail
      throw;
    }
    const double detected = ev.time + config.detection_delay;
    if (detected >= config.horizon) {
      log.append(config.horizon, EventType::kError,
                 {{"error", "DetectedAfterHorizon"}, {"robot_id", ev.robot_id}});
      return log;
    }
    log.append(detected, EventType::kFailureDetected, {{"robot_id", ev.robot_id}});
    OperatorDecision decision{config.L, config.gamma};
    if (config.operator_mode == OperatorMode::kInteractive) decision = op({ev, detected});
    world->commit(decision.L, decision.gamma, log);
  }
  world->finish(log);
  return log;
}

/// World state reconstructed by folding a run log's events in order.
struct ReplayState {
  Placement placement;
  std::set<RobotId> failed;
  std::optional<RobotId> pending;
  double clock = 0.0;
};

inline ReplayState replay_state(std::span<const LogEvent> events, const Grid& grid) {
  ReplayState st;
  for (const LogEvent& e : events) {
    st.clock = e.time;
    switch (e.type) {
      case EventType::kPlaced:
      case EventType::kAssignmentComputed:
        st.placement = placement_from_json(e.payload.at("placement"), grid);
        st.pending.reset();
        break;
      case EventType::kFailureInjected: {
        RobotId id = e.payload.at("robot_id").get<RobotId>();
        st.placement.remove(id);
        st.failed.insert(id);
        st.pending = id;
        break;
      }
      default:
        break;
    }
  }
  return st;
}

// ---------------------------------------------------------------------------
// Experiments

struct TableRow {
  double L = 0.0;
  int trial = 0;
  std::string metric;
  double value = 0.0;
};

inline std::string table_csv(std::span<const TableRow> rows) {
  std::ostringstream out;
  out.precision(17);
  out << "L,trial,metric,value\n";
  for (const TableRow& r : rows) out << r.L << ',' << r.trial << ',' << r.metric << ',' << r.value << '\n';
  return out.str();
}

struct ExperimentOptions {
  std::vector<double> Ls{10.0, 15.0, 20.0};
  int trials = 10;
  unsigned jobs = 1;
  int timing_repeats = 3;
  std::vector<int> added_counts{10, 20, 30, 40};
};

namespace detail {

/// Runs body(trial) for every trial on up to `jobs` threads.
template <class F>
void parallel_trials(int trials, unsigned jobs, F&& body) {
  jobs = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(std::max(trials, 1))));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int t = next++; t < trials; t = next++) {
      try {
        body(t);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < jobs; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

/// The failure of one trial, drawn from a stream seeded by (seed, trial).
inline FailureEvent trial_failure(const ScenarioWorld& world, int trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(world.config().seed),
                    static_cast<std::uint32_t>(world.config().seed >> 32), static_cast<std::uint32_t>(trial)};
  Rng rng(seq);
  auto active = world.active_robots();
  return sample_failure(active, world.config().horizon, rng);
}

inline FleetView trial_fleet(const ScenarioWorld& world, const SpecMap& specs) {
  FleetView view;
  view.grid = &world.grid();
  view.specs = &specs;
  view.placement = world.placement();
  view.activated_at = world.activated_at();
  view.pool_available.assign(world.available().begin(), world.available().end());
  return view;
}

inline CoordinationParams trial_params(const ScenarioConfig& config, double L, double gamma, double tf) {
  CoordinationParams p;
  p.L = L;
  p.gamma = gamma;
  p.alpha = config.alpha;
  p.failure_time = tf;
  p.horizon = config.horizon;
  p.iterate_until_satisfied = config.iterate_until_satisfied;
  p.solver.time_limit_s = config.solver_time_limit_s;
  return p;
}

inline std::vector<TableRow> flatten(const std::vector<std::vector<TableRow>>& per_trial,
                                     std::span<const double> Ls) {
  std::vector<TableRow> rows;
  for (double L : Ls) {
    for (const auto& trial_rows : per_trial) {
      for (const TableRow& r : trial_rows) {
        if (r.L == L) rows.push_back(r);
      }
    }
  }
  return rows;
}

}  // namespace detail

/// Per trial and L: whole-domain coverage right after local repositioning
/// (gamma = 0) and the wall time of that repositioning (naive greedy, best of
/// `timing_repeats` runs). All Ls of a trial share the same failure.
inline std::vector<TableRow> experiment_coverage_vs_L(const ScenarioConfig& config, const ExperimentOptions& opt) {
  RunLog scratch;
  const ScenarioWorld world = ScenarioWorld::create(config, scratch);
  const CellSet all = CellSet::all(world.grid());
  std::vector<std::vector<TableRow>> per_trial(static_cast<std::size_t>(opt.trials));
  detail::parallel_trials(opt.trials, opt.jobs, [&](int t) {
    FailureEvent f = detail::trial_failure(world, t);
    FleetView fleet = detail::trial_fleet(world, world.specs());
    for (double L : opt.Ls) {
      CoordinationParams p = detail::trial_params(config, L, 0.0, f.time);
      p.lazy = false;
      CoordinationResult res = reconfigure(fleet, f.robot_id, p);
      double best = res.timings.local_s;
      for (int k = 1; k < opt.timing_repeats; ++k) {
        best = std::min(best, reconfigure(fleet, f.robot_id, p).timings.local_s);
      }
      auto& out = per_trial[static_cast<std::size_t>(t)];
      out.push_back({L, t, "coverage", coverage(res.new_placement, world.specs(), world.grid(), all)});
      out.push_back({L, t, "wall_time_s", best});
    }
  });
  return detail::flatten(per_trial, opt.Ls);
}

/// Per trial and L: number of pool robots requested with gamma = 1, plus the
/// same count under gamma = 0 as a control.
inline std::vector<TableRow> experiment_robots_vs_L(const ScenarioConfig& config, const ExperimentOptions& opt) {
  RunLog scratch;
  const ScenarioWorld world = ScenarioWorld::create(config, scratch);
  std::vector<std::vector<TableRow>> per_trial(static_cast<std::size_t>(opt.trials));
  detail::parallel_trials(opt.trials, opt.jobs, [&](int t) {
    FailureEvent f = detail::trial_failure(world, t);
    FleetView fleet = detail::trial_fleet(world, world.specs());
    for (double L : opt.Ls) {
      CoordinationResult full = reconfigure(fleet, f.robot_id, detail::trial_params(config, L, 1.0, f.time));
      CoordinationResult none = reconfigure(fleet, f.robot_id, detail::trial_params(config, L, 0.0, f.time));
      auto& out = per_trial[static_cast<std::size_t>(t)];
      out.push_back({L, t, "requested_robots", static_cast<double>(full.requested_robots.ids.size())});
      out.push_back({L, t, "ratio_achieved", full.ratio_achieved});
      out.push_back({L, t, "requested_robots_gamma0", static_cast<double>(none.requested_robots.ids.size())});
    }
  });
  return detail::flatten(per_trial, opt.Ls);
}

/// Per trial and L: base coverage after local repositioning (gamma = 0), then
/// for each count, clones of the pool's median robot placed greedily inside
/// the neighborhood with every existing robot held fixed.
inline std::vector<TableRow> experiment_added_robots(const ScenarioConfig& config, const ExperimentOptions& opt) {
  RunLog scratch;
  const ScenarioWorld world = ScenarioWorld::create(config, scratch);
  const CellSet all = CellSet::all(world.grid());
  const RobotSpec median = median_spec(world.pool());
  const int max_count = opt.added_counts.empty()
                            ? 0
                            : *std::max_element(opt.added_counts.begin(), opt.added_counts.end());
  SpecMap specs = world.specs();
  const RobotId first_clone = specs.rbegin()->first + 1;
  for (int k = 0; k < max_count; ++k) {
    RobotSpec c = median;
    c.id = first_clone + k;
    specs[c.id] = c;
  }
  std::vector<std::vector<TableRow>> per_trial(static_cast<std::size_t>(opt.trials));
  detail::parallel_trials(opt.trials, opt.jobs, [&](int t) {
    FailureEvent f = detail::trial_failure(world, t);
    FleetView fleet = detail::trial_fleet(world, specs);
    const Vec2 center = world.placement().at(f.robot_id).position;
    for (double L : opt.Ls) {
      CoordinationResult res = reconfigure(fleet, f.robot_id, detail::trial_params(config, L, 0.0, f.time));
      const double base = coverage(res.new_placement, specs, world.grid(), all);
      auto& out = per_trial[static_cast<std::size_t>(t)];
      out.push_back({L, t, "base_coverage", base});
      const CellSet region = neighborhood_cells(world.grid(), center, L);
      for (int count : opt.added_counts) {
        std::vector<RobotSpec> team;
        for (int k = 0; k < count; ++k) team.push_back(specs.at(first_clone + k));
        double value = base;
        if (count > 0) {
          Placement p = lazy_greedy_place(team, world.grid(), region, res.new_placement, specs);
          value = coverage(p, specs, world.grid(), all);
        }
        std::string suffix = "@" + std::to_string(count);
        out.push_back({L, t, "coverage" + suffix, value});
        out.push_back({L, t, "gain_pct" + suffix, base > 0.0 ? 100.0 * (value - base) / base : 0.0});
      }
    }
  });
  return detail::flatten(per_trial, opt.Ls);
}

}  // namespace rescov
