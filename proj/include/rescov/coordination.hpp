#pragma once

// Tunable recovery after a robot failure: re-place the failed robot's
// L-neighbors inside the square neighborhood, test the recovered coverage
// ratio against gamma, and if it falls short request extra robots from the
// pool and re-place once more.

#include <chrono>
#include <limits>
#include <optional>
#include <set>
#include <vector>

#include <nlohmann/json.hpp>

#include "rescov/coverage.hpp"
#include "rescov/placement.hpp"
#include "rescov/reliability.hpp"
#include "rescov/team_selection.hpp"
#include "rescov/world.hpp"

namespace rescov {

struct NeighborPartition {
  std::vector<RobotId> inside;
  std::vector<RobotId> outside;
};

/// Splits the robots of `placement` (other than the failed one) by
/// infinity-norm distance <= L from the failed robot's position.
inline NeighborPartition l_neighbors(const Placement& placement, RobotId failed_id, double L) {
  Vec2 center = placement.at(failed_id).position;
  NeighborPartition out;
  for (const auto& [id, slot] : placement) {
    if (id == failed_id) continue;
    (inf_distance(slot.position, center) <= L ? out.inside : out.outside).push_back(id);
  }
  return out;
}

/// H(after, cells) / H(before, cells); 1 when the denominator is zero.
inline double coverage_ratio(const Placement& after, const Placement& before, const SpecMap& specs,
                             const Grid& grid, const CellSet& cells) {
  double denom = coverage(before, specs, grid, cells);
  if (denom <= 0.0) return 1.0;
  return coverage(after, specs, grid, cells) / denom;
}

/// Fleet state the coordinator reads. `placement` still holds the failed robot
/// at its pre-failure cell.
struct FleetView {
  const Grid* grid = nullptr;
  const SpecMap* specs = nullptr;            // every robot that may appear (team and pool)
  Placement placement;                        // active robots, failed one included
  std::map<RobotId, double> activated_at;     // activation time of each placed robot
  std::vector<RobotId> pool_available;        // pool robots that may still be requested
};

struct CoordinationParams {
  double L = 0.0;
  double gamma = 1.0;
  double alpha = 0.3;
  double failure_time = 0.0;  // T_f
  double horizon = 500.0;     // T
  bool iterate_until_satisfied = false;
  bool lazy = true;  // lazy greedy; same output as the exhaustive-round greedy
  // Keep the better of the greedy result and a conservative alternative:
  // inside robots staying put for the local step, and the local placement
  // plus greedily added new robots for the augmentation step.
  bool fallback = true;
  SolverOptions solver;
};

enum class AugmentStatus { kNotNeeded, kAdded, kInfeasible, kNotEnoughCells };

inline std::string_view to_string(AugmentStatus s) {
  switch (s) {
    case AugmentStatus::kNotNeeded: return "not_needed";
    case AugmentStatus::kAdded: return "added";
    case AugmentStatus::kInfeasible: return "infeasible";
    case AugmentStatus::kNotEnoughCells: return "not_enough_cells";
  }
  return "unknown";
}

struct PhaseTimings {
  double local_s = 0.0;
  double selection_s = 0.0;
  double augment_s = 0.0;
};

struct CoordinationResult {
  RobotId failed_id = 0;
  double L = 0.0;
  double gamma = 0.0;
  Placement new_placement;
  std::vector<RobotId> inside;
  std::vector<RobotId> outside;
  std::size_t neighborhood_cells = 0;
  double baseline = 0.0;
  double ratio_achieved = 0.0;
  Selection requested_robots;
  std::optional<double> ratio_after_augment;
  bool satisfied = false;
  AugmentStatus augment = AugmentStatus::kNotNeeded;
  double alpha_tf = std::numeric_limits<double>::infinity();
  std::size_t gain_evaluations = 0;
  bool local_fallback = false;    // inside robots kept their positions
  bool augment_fallback = false;  // new robots added around the local placement
  PhaseTimings timings;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline std::vector<RobotSpec> specs_for(const SpecMap& specs, std::span<const RobotId> ids) {
  std::vector<RobotSpec> out;
  out.reserve(ids.size());
  for (RobotId id : ids) out.push_back(spec_of(specs, id));
  return out;
}

}  // namespace detail

/// Runs the recovery for one failure. Pure: the returned placement excludes
/// the failed robot, includes any requested robots, and leaves every robot
/// outside the neighborhood where it was.
inline CoordinationResult reconfigure(const FleetView& fleet, RobotId failed_id,
                                      const CoordinationParams& params) {
  if (!(params.gamma >= 0.0 && params.gamma <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "gamma must lie in [0,1]");
  }
  if (!(params.L >= 0.0)) throw Error(Errc::kInvalidArgument, "L must be nonnegative");
  const Grid& grid = *fleet.grid;
  const SpecMap& specs = *fleet.specs;
  const Placement& before = fleet.placement;

  CoordinationResult res;
  res.failed_id = failed_id;
  res.L = params.L;
  res.gamma = params.gamma;
  auto part = l_neighbors(before, failed_id, params.L);
  res.inside = part.inside;
  res.outside = part.outside;

  const CellSet region = neighborhood_cells(grid, before.at(failed_id).position, params.L);
  res.neighborhood_cells = region.size();
  res.baseline = coverage(before, specs, grid, region);

  Placement frozen;
  for (RobotId id : part.outside) frozen.place(id, before.at(id).cell, grid);

  auto ratio_of = [&](const Placement& p) {
    if (res.baseline <= 0.0) return 1.0;
    return coverage(p, specs, grid, region) / res.baseline;
  };

  auto place = [&](std::span<const RobotSpec> team, GreedyStats* st) {
    return params.lazy ? lazy_greedy_place(team, grid, region, frozen, specs, st)
                       : greedy_place(team, grid, region, frozen, specs, st);
  };

  auto start = std::chrono::steady_clock::now();
  GreedyStats stats;
  std::vector<RobotId> movers = part.inside;
  auto team = detail::specs_for(specs, movers);
  res.new_placement = place(team, &stats);
  res.timings.local_s = detail::seconds_since(start);
  res.ratio_achieved = ratio_of(res.new_placement);
  if (params.fallback) {
    Placement stay = before;
    stay.remove(failed_id);
    double stay_ratio = ratio_of(stay);
    if (stay_ratio > res.ratio_achieved) {
      res.new_placement = std::move(stay);
      res.ratio_achieved = stay_ratio;
      res.local_fallback = true;
    }
  }
  res.satisfied = res.ratio_achieved >= params.gamma;

  std::set<RobotId> available(fleet.pool_available.begin(), fleet.pool_available.end());
  std::map<RobotId, double> activated = fleet.activated_at;
  activated.erase(failed_id);
  const double area_f = spec_of(specs, failed_id).sense_area;

  while (!res.satisfied) {
    auto sel_start = std::chrono::steady_clock::now();
    std::vector<ActiveRobot> survivors;
    for (const auto& [id, slot] : res.new_placement) {
      auto it = activated.find(id);
      survivors.push_back({spec_of(specs, id), it == activated.end() ? params.failure_time : it->second});
    }
    res.alpha_tf = alpha_of_tf(survivors, params.alpha, params.failure_time, params.horizon);

    std::vector<RobotSpec> pool;
    std::vector<bool> mask;
    for (const auto& [id, spec] : specs) {
      if (before.contains(id)) continue;
      pool.push_back(spec);
      mask.push_back(available.contains(id));
    }
    SolveResult solved{SolveStatus::kInfeasible, {}, 0};
    if (!pool.empty()) {
      auto ilp = build_intermediate_ilp(
          pool, mask, {res.alpha_tf, area_f, params.horizon - params.failure_time});
      solved = solve_min_cardinality(ilp, params.solver);
    }
    res.timings.selection_s += detail::seconds_since(sel_start);
    if (!solved.has_solution() || solved.selection.empty()) {
      if (res.augment == AugmentStatus::kNotNeeded) res.augment = AugmentStatus::kInfeasible;
      break;
    }

    auto aug_start = std::chrono::steady_clock::now();
    std::vector<RobotId> candidate_movers = movers;
    candidate_movers.insert(candidate_movers.end(), solved.selection.ids.begin(), solved.selection.ids.end());
    std::optional<Placement> augmented;
    bool incremental = false;
    try {
      augmented = place(detail::specs_for(specs, candidate_movers), &stats);
    } catch (const Error& e) {
      if (e.code() != Errc::kNotEnoughCells) throw;
    }
    if (params.fallback) {
      try {
        auto added = detail::specs_for(specs, solved.selection.ids);
        Placement grown = params.lazy ? lazy_greedy_place(added, grid, region, res.new_placement, specs, &stats)
                                      : greedy_place(added, grid, region, res.new_placement, specs, &stats);
        if (!augmented || ratio_of(grown) > ratio_of(*augmented)) {
          augmented = std::move(grown);
          incremental = true;
        }
      } catch (const Error& e) {
        if (e.code() != Errc::kNotEnoughCells) throw;
      }
    }
    res.timings.augment_s += detail::seconds_since(aug_start);
    if (!augmented) {
      res.augment = AugmentStatus::kNotEnoughCells;
      break;
    }
    res.augment_fallback = res.augment_fallback || incremental;
    movers = std::move(candidate_movers);
    for (RobotId id : solved.selection.ids) {
      available.erase(id);
      activated[id] = params.failure_time;
      res.requested_robots.ids.push_back(id);
    }
    res.new_placement = std::move(*augmented);
    res.augment = AugmentStatus::kAdded;
    res.ratio_after_augment = ratio_of(res.new_placement);
    res.satisfied = *res.ratio_after_augment >= params.gamma;
    if (!params.iterate_until_satisfied) break;
  }
  std::sort(res.requested_robots.ids.begin(), res.requested_robots.ids.end());
  res.gain_evaluations = stats.gain_evaluations;
  return res;
}

inline void to_json(nlohmann::json& j, const CoordinationResult& r) {
  j = {{"failed_id", r.failed_id},
       {"L", r.L},
       {"gamma", r.gamma},
       {"new_placement", r.new_placement},
       {"inside", r.inside},
       {"outside", r.outside},
       {"neighborhood_cells", r.neighborhood_cells},
       {"baseline", r.baseline},
       {"ratio_achieved", r.ratio_achieved},
       {"requested_robots", r.requested_robots},
       {"ratio_after_augment", r.ratio_after_augment ? nlohmann::json(*r.ratio_after_augment)
                                                     : nlohmann::json(nullptr)},
       {"satisfied", r.satisfied},
       {"augment", to_string(r.augment)},
       {"alpha_tf", std::isfinite(r.alpha_tf) ? nlohmann::json(r.alpha_tf) : nlohmann::json("inf")},
       {"gain_evaluations", r.gain_evaluations},
       {"local_fallback", r.local_fallback},
       {"augment_fallback", r.augment_fallback}};
}

inline nlohmann::json timings_json(const PhaseTimings& t) {
  return {{"local_s", t.local_s}, {"selection_s", t.selection_s}, {"augment_s", t.augment_s}};
}

}  // namespace rescov
