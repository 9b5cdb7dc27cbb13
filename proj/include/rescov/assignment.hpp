#pragma once

// Start -> goal assignment minimizing total Euclidean travel (Hungarian
// method), and a pairwise clearance check for synchronized straight-line
// trajectories parameterized on t in [0, 1].

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "rescov/error.hpp"
#include "rescov/geometry.hpp"

namespace rescov {

struct Assignment {
  std::vector<std::size_t> goal_of;  // start index -> goal index
  double total_cost = 0.0;
};

namespace detail {

/// O(n^3) Hungarian method with row/column potentials on a dense n x n cost
/// matrix. Cells set to +infinity are forbidden. Returns row -> column, or an
/// empty vector when no finite perfect matching exists.
inline std::vector<std::size_t> hungarian(const std::vector<double>& cost, std::size_t n) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      std::size_t i0 = p[j0], j1 = 0;
      double delta = inf;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double c = cost[(i0 - 1) * n + (j - 1)];
        double cur = c == inf ? inf : c - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (delta == inf) return {};
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

inline double matching_cost(const std::vector<double>& cost, std::size_t n,
                            const std::vector<std::size_t>& row_to_col) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += cost[i * n + row_to_col[i]];
  return total;
}

}  // namespace detail

/// Minimum total-distance perfect matching. Among optimal matchings (within a
/// relative tolerance of 1e-9) the lexicographically smallest permutation wins.
inline Assignment assign_goals(std::span<const Vec2> starts, std::span<const Vec2> goals) {
  if (starts.size() != goals.size()) throw Error(Errc::kSizeMismatch, "starts and goals differ in size");
  const std::size_t n = starts.size();
  if (n == 0) throw Error(Errc::kInvalidArgument, "need at least one start");
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = distance(starts[i], goals[j]);
  }
  auto first = detail::hungarian(cost, n);
  const double optimum = detail::matching_cost(cost, n, first);
  const double tol = 1e-9 * std::max(1.0, optimum);

  // Fix rows one at a time to the smallest column that keeps the optimum reachable.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> work = cost;
  double fixed_cost = 0.0;
  std::vector<std::size_t> goal_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (work[i * n + j] == inf) continue;
      std::vector<double> trial = work;
      for (std::size_t jj = 0; jj < n; ++jj) {
        if (jj != j) trial[i * n + jj] = inf;
      }
      for (std::size_t ii = i + 1; ii < n; ++ii) trial[ii * n + j] = inf;
      // Rows already fixed contribute through their single finite entry.
      auto m = detail::hungarian(trial, n);
      if (m.empty()) continue;
      if (detail::matching_cost(trial, n, m) <= optimum + tol) {
        work = std::move(trial);
        goal_of[i] = j;
        fixed_cost += cost[i * n + j];
        break;
      }
    }
  }
  return {goal_of, fixed_cost};
}

struct ClearanceViolation {
  std::size_t first = 0;
  std::size_t second = 0;
  double min_distance = 0.0;
  double time = 0.0;
};

struct PairApproach {
  double min_distance = 0.0;
  double time = 0.0;
};

/// Closest approach of two points moving linearly and synchronously over t in [0, 1].
inline PairApproach closest_approach(Vec2 start_a, Vec2 goal_a, Vec2 start_b, Vec2 goal_b) {
  Vec2 d0 = start_a - start_b;
  Vec2 vel = (goal_a - start_a) - (goal_b - start_b);
  double vv = dot(vel, vel);
  double t = vv > 0.0 ? std::clamp(-dot(d0, vel) / vv, 0.0, 1.0) : 0.0;
  return {norm(d0 + t * vel), t};
}

/// Pairs whose synchronized straight-line trajectories come closer than `clearance`.
inline std::vector<ClearanceViolation> check_clearance(std::span<const Vec2> starts,
                                                       std::span<const Vec2> goals,
                                                       const Assignment& assignment,
                                                       double clearance) {
  if (starts.size() != goals.size() || assignment.goal_of.size() != starts.size()) {
    throw Error(Errc::kSizeMismatch, "starts, goals and assignment differ in size");
  }
  std::vector<ClearanceViolation> out;
  const std::size_t n = starts.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      auto approach = closest_approach(starts[a], goals[assignment.goal_of[a]], starts[b],
                                       goals[assignment.goal_of[b]]);
      if (approach.min_distance < clearance) out.push_back({a, b, approach.min_distance, approach.time});
    }
  }
  return out;
}

inline void to_json(nlohmann::json& j, const Assignment& a) {
  j = {{"goal_of", a.goal_of}, {"total_cost", a.total_cost}};
}

inline void to_json(nlohmann::json& j, const ClearanceViolation& v) {
  j = {{"first", v.first}, {"second", v.second}, {"min_distance", v.min_distance}, {"time", v.time}};
}

}  // namespace rescov
