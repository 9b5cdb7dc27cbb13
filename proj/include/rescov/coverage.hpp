#pragma once

// Probabilistic detection model and the discrete coverage functional
//   H(X, C) = sum_{w in C} phi_w * (1 - prod_i (1 - P_i(p_w)))
// together with an incremental cache of per-cell miss products.

#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "rescov/error.hpp"
#include "rescov/geometry.hpp"
#include "rescov/reliability.hpp"
#include "rescov/world.hpp"

namespace rescov {

struct PlacedRobot {
  CellIndex cell = 0;
  Vec2 position;

  friend bool operator==(const PlacedRobot&, const PlacedRobot&) = default;
};

/// Robot id -> occupied cell. At most one robot per cell; positions are cell centers.
class Placement {
 public:
  void place(RobotId id, CellIndex cell, const Grid& grid) {
    if (cell >= grid.size()) throw Error(Errc::kInvalidArgument, "cell index out of range");
    if (occupant(cell)) {
      throw Error(Errc::kCellOccupied, "cell " + std::to_string(cell) + " already occupied");
    }
    if (robots_.contains(id)) {
      throw Error(Errc::kInvalidArgument, "robot " + std::to_string(id) + " already placed");
    }
    robots_[id] = {cell, grid.center(cell)};
    cells_[cell] = id;
  }

  void remove(RobotId id) {
    auto it = robots_.find(id);
    if (it == robots_.end()) throw Error(Errc::kUnknownRobot, "robot " + std::to_string(id));
    cells_.erase(it->second.cell);
    robots_.erase(it);
  }

  bool contains(RobotId id) const { return robots_.contains(id); }

  const PlacedRobot& at(RobotId id) const {
    auto it = robots_.find(id);
    if (it == robots_.end()) throw Error(Errc::kUnknownRobot, "robot " + std::to_string(id));
    return it->second;
  }

  std::optional<RobotId> occupant(CellIndex cell) const {
    auto it = cells_.find(cell);
    if (it == cells_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return robots_.size(); }
  bool empty() const { return robots_.empty(); }
  auto begin() const { return robots_.begin(); }
  auto end() const { return robots_.end(); }

  std::vector<RobotId> ids() const {
    std::vector<RobotId> out;
    out.reserve(robots_.size());
    for (const auto& [id, slot] : robots_) out.push_back(id);
    return out;
  }

  friend bool operator==(const Placement& a, const Placement& b) { return a.robots_ == b.robots_; }

 private:
  std::map<RobotId, PlacedRobot> robots_;
  std::map<CellIndex, RobotId> cells_;
};

/// exp(-decay * d) inside the sensing radius, 0 outside.
inline double detection_probability(const RobotSpec& spec, Vec2 robot_pos, Vec2 point) {
  double d = distance(robot_pos, point);
  if (d > spec.sense_radius) return 0.0;
  return std::exp(-spec.decay * d);
}

/// Visits each grid cell whose center lies within the robot's sensing disk.
template <class F>
void for_each_sensed_cell(const Grid& grid, const RobotSpec& spec, Vec2 pos, F&& visit) {
  double a = spec.sense_radius;
  grid.for_each_in_box({pos.x - a, pos.y - a}, {pos.x + a, pos.y + a}, [&](CellIndex w, Vec2 c) {
    double p = detection_probability(spec, pos, c);
    if (p > 0.0) visit(w, p);
  });
}

inline const RobotSpec& spec_of(const SpecMap& specs, RobotId id) {
  auto it = specs.find(id);
  if (it == specs.end()) throw Error(Errc::kUnknownRobot, "no spec for robot " + std::to_string(id));
  return it->second;
}

/// Coverage of `cells` by `placement`, using the grid's (un-renormalized) weights.
inline double coverage(const Placement& placement, const SpecMap& specs, const Grid& grid,
                       const CellSet& cells) {
  double total = 0.0;
  for (CellIndex w : cells) {
    Vec2 p = grid.center(w);
    double miss = 1.0;
    for (const auto& [id, slot] : placement) {
      miss *= 1.0 - detection_probability(spec_of(specs, id), slot.position, p);
    }
    total += grid.weight(w) * (1.0 - miss);
  }
  return total;
}

/// Per-cell miss products m_w = prod_i (1 - P_i(p_w)) for the placement it holds.
class CoverageCache {
 public:
  explicit CoverageCache(const Grid& grid) : grid_(&grid), miss_(grid.size(), 1.0) {}

  CoverageCache(const Grid& grid, const Placement& placement, const SpecMap& specs)
      : CoverageCache(grid) {
    for (const auto& [id, slot] : placement) apply(spec_of(specs, id), slot.cell);
  }

  const Grid& grid() const { return *grid_; }
  const Placement& placement() const { return placement_; }
  double miss(CellIndex w) const { return miss_[w]; }
  std::span<const double> misses() const { return miss_; }

  /// H(X + candidate) - H(X) restricted to the region.
  double marginal_gain(const RobotSpec& spec, CellIndex cell, const CellMask& region) const {
    if (placement_.occupant(cell)) {
      throw Error(Errc::kCellOccupied, "cell " + std::to_string(cell) + " already occupied");
    }
    return gain_unchecked(spec, cell, region);
  }

  double marginal_gain(const RobotSpec& spec, CellIndex cell, const CellSet& cells) const {
    return marginal_gain(spec, cell, CellMask(*grid_, cells));
  }

  /// Gain without the occupancy check; callers guarantee the cell is free.
  double gain_unchecked(const RobotSpec& spec, CellIndex cell, const CellMask& region) const {
    double gain = 0.0;
    for_each_sensed_cell(*grid_, spec, grid_->center(cell), [&](CellIndex w, double p) {
      if (region.contains(w)) gain += grid_->weight(w) * miss_[w] * p;
    });
    return gain;
  }

  void apply(const RobotSpec& spec, CellIndex cell) {
    placement_.place(spec.id, cell, *grid_);
    for_each_sensed_cell(*grid_, spec, grid_->center(cell),
                         [&](CellIndex w, double p) { miss_[w] *= 1.0 - p; });
  }

  double value(const CellSet& cells) const {
    double total = 0.0;
    for (CellIndex w : cells) total += grid_->weight(w) * (1.0 - miss_[w]);
    return total;
  }

 private:
  const Grid* grid_;
  std::vector<double> miss_;
  Placement placement_;
};

inline void to_json(nlohmann::json& j, const Placement& placement) {
  j = nlohmann::json::array();
  for (const auto& [id, slot] : placement) {
    j.push_back({{"robot_id", id},
                 {"cell", slot.cell},
                 {"x", slot.position.x},
                 {"y", slot.position.y}});
  }
}

inline Placement placement_from_json(const nlohmann::json& j, const Grid& grid) {
  Placement p;
  for (const auto& e : j) p.place(e.at("robot_id").get<RobotId>(), e.at("cell").get<CellIndex>(), grid);
  return p;
}

}  // namespace rescov
