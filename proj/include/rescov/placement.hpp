#pragma once

// Greedy placement of a (possibly heterogeneous) team onto grid cells,
// maximizing coverage of a region. Each round commits the (robot, cell) pair
// of largest marginal gain; ties go to the lower robot id, then lower cell.

#include <algorithm>
#include <cstddef>
#include <queue>
#include <span>
#include <vector>

#include "rescov/coverage.hpp"
#include "rescov/error.hpp"
#include "rescov/world.hpp"

namespace rescov {

struct GreedyStats {
  std::size_t gain_evaluations = 0;
  /// Realized gain of each committed pair, in commit order.
  std::vector<double> committed_gains;
};

namespace detail {

// Robots whose sensing parameters coincide yield identical gains for every
// cell, so only the lowest unplaced id of each class can win a tie-break.
struct SensingClass {
  std::vector<RobotSpec> members;  // ascending id
  std::size_t next = 0;

  bool exhausted() const { return next >= members.size(); }
  const RobotSpec& representative() const { return members[next]; }
};

inline std::vector<SensingClass> sensing_classes(std::span<const RobotSpec> team) {
  std::vector<RobotSpec> sorted(team.begin(), team.end());
  std::sort(sorted.begin(), sorted.end(), [](const RobotSpec& a, const RobotSpec& b) { return a.id < b.id; });
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    if (sorted[k].id == sorted[k - 1].id) throw Error(Errc::kInvalidArgument, "duplicate robot id in team");
  }
  std::vector<SensingClass> classes;
  for (const RobotSpec& r : sorted) {
    auto it = std::find_if(classes.begin(), classes.end(), [&](const SensingClass& c) {
      return c.members.front().sense_radius == r.sense_radius && c.members.front().decay == r.decay;
    });
    if (it == classes.end()) {
      classes.push_back({{r}, 0});
    } else {
      it->members.push_back(r);
    }
  }
  return classes;
}

struct GreedySetup {
  CoverageCache cache;
  CellMask region;
  std::vector<CellIndex> candidates;  // region cells not taken by frozen robots
};

inline GreedySetup prepare_greedy(std::span<const RobotSpec> team, const Grid& grid,
                                  const CellSet& cells, const Placement& frozen,
                                  const SpecMap& frozen_specs) {
  GreedySetup setup{CoverageCache(grid, frozen, frozen_specs), CellMask(grid, cells), {}};
  for (const RobotSpec& r : team) {
    if (frozen.contains(r.id)) throw Error(Errc::kInvalidArgument, "team robot is also frozen");
  }
  for (CellIndex c : cells) {
    if (!frozen.occupant(c)) setup.candidates.push_back(c);
  }
  if (team.size() > setup.candidates.size()) {
    throw Error(Errc::kNotEnoughCells, std::to_string(team.size()) + " robots but only " +
                                           std::to_string(setup.candidates.size()) + " free cells");
  }
  return setup;
}

}  // namespace detail

/// Exhaustive-round greedy: each round evaluates every (unplaced robot, free
/// cell) pair against the cache seeded with `frozen`. Returns frozen robots
/// plus the placed team.
inline Placement greedy_place(std::span<const RobotSpec> team, const Grid& grid, const CellSet& cells,
                              const Placement& frozen, const SpecMap& frozen_specs,
                              GreedyStats* stats = nullptr) {
  auto setup = detail::prepare_greedy(team, grid, cells, frozen, frozen_specs);
  auto classes = detail::sensing_classes(team);
  std::vector<char> taken(grid.size(), 0);
  GreedyStats local;
  GreedyStats& st = stats ? *stats : local;

  for (std::size_t round = 0; round < team.size(); ++round) {
    double best_gain = -1.0;
    RobotId best_id = 0;
    std::size_t best_class = 0;
    CellIndex best_cell = 0;
    bool found = false;
    for (std::size_t k = 0; k < classes.size(); ++k) {
      if (classes[k].exhausted()) continue;
      const RobotSpec& r = classes[k].representative();
      for (CellIndex c : setup.candidates) {
        if (taken[c]) continue;
        double g = setup.cache.gain_unchecked(r, c, setup.region);
        ++st.gain_evaluations;
        bool better = !found || g > best_gain ||
                      (g == best_gain && (r.id < best_id || (r.id == best_id && c < best_cell)));
        if (better) {
          found = true;
          best_gain = g;
          best_id = r.id;
          best_class = k;
          best_cell = c;
        }
      }
    }
    setup.cache.apply(classes[best_class].representative(), best_cell);
    ++classes[best_class].next;
    taken[best_cell] = 1;
    st.committed_gains.push_back(best_gain);
  }

  Placement out = frozen;
  for (const auto& [id, slot] : setup.cache.placement()) {
    if (!frozen.contains(id)) out.place(id, slot.cell, grid);
  }
  return out;
}

/// Lazy (accelerated) greedy with identical output to greedy_place. Stale gains
/// upper-bound current gains by submodularity, so a popped entry that is
/// fresh for the current round is the round's argmax.
inline Placement lazy_greedy_place(std::span<const RobotSpec> team, const Grid& grid,
                                   const CellSet& cells, const Placement& frozen,
                                   const SpecMap& frozen_specs, GreedyStats* stats = nullptr) {
  auto setup = detail::prepare_greedy(team, grid, cells, frozen, frozen_specs);
  auto classes = detail::sensing_classes(team);
  std::vector<char> taken(grid.size(), 0);
  GreedyStats local;
  GreedyStats& st = stats ? *stats : local;

  struct Entry {
    double gain;
    RobotId id;
    CellIndex cell;
    std::size_t cls;
    std::size_t round;
  };
  // Max-heap on gain, then min id, then min cell.
  auto worse = [](const Entry& a, const Entry& b) {
    if (a.gain != b.gain) return a.gain < b.gain;
    if (a.id != b.id) return a.id > b.id;
    return a.cell > b.cell;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);

  for (std::size_t k = 0; k < classes.size(); ++k) {
    const RobotSpec& r = classes[k].representative();
    for (CellIndex c : setup.candidates) {
      double g = setup.cache.gain_unchecked(r, c, setup.region);
      ++st.gain_evaluations;
      heap.push({g, r.id, c, k, 0});
    }
  }

  for (std::size_t round = 0; round < team.size(); ++round) {
    while (true) {
      Entry top = heap.top();
      heap.pop();
      if (taken[top.cell] || classes[top.cls].exhausted()) continue;
      const RobotSpec& r = classes[top.cls].representative();
      if (top.round == round && top.id == r.id) {
        setup.cache.apply(r, top.cell);
        ++classes[top.cls].next;
        taken[top.cell] = 1;
        st.committed_gains.push_back(top.gain);
        break;
      }
      double g = setup.cache.gain_unchecked(r, top.cell, setup.region);
      ++st.gain_evaluations;
      heap.push({g, r.id, top.cell, top.cls, round});
    }
  }

  Placement out = frozen;
  for (const auto& [id, slot] : setup.cache.placement()) {
    if (!frozen.contains(id)) out.place(id, slot.cell, grid);
  }
  return out;
}

}  // namespace rescov
