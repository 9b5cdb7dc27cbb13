#pragma once

// Minimum-cardinality 0-1 programs for initial team selection and intermediate
// (mid-mission) robot selection, solved exactly by iterative deepening on the
// cardinality with depth-first search and suffix bounds.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rescov/error.hpp"
#include "rescov/reliability.hpp"

namespace rescov {

enum class Sense { kLessEqual, kGreaterEqual };

struct LinearConstraint {
  std::string name;
  std::vector<double> coeffs;
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;
};

/// Feasibility tolerance on every linear constraint.
inline constexpr double kConstraintTolerance = 1e-9;

inline bool satisfied(const LinearConstraint& c, double lhs) {
  return c.sense == Sense::kLessEqual ? lhs <= c.rhs + kConstraintTolerance
                                      : lhs >= c.rhs - kConstraintTolerance;
}

/// minimize sum(x) over binary x subject to linear constraints, with x_i = 0
/// forced wherever `available[i]` is false.
struct IlpProblem {
  std::vector<RobotId> var_ids;
  std::vector<LinearConstraint> constraints;
  std::vector<bool> available;
  std::vector<std::string> notes;

  std::size_t n_vars() const { return var_ids.size(); }

  void validate() const {
    if (available.size() != var_ids.size()) {
      throw Error(Errc::kSizeMismatch, "availability mask length != n_vars");
    }
    for (const auto& c : constraints) {
      if (c.coeffs.size() != var_ids.size()) {
        throw Error(Errc::kSizeMismatch, "constraint '" + c.name + "' has wrong length");
      }
    }
  }

  /// True when the chosen variable indices satisfy the mask and all constraints.
  bool is_feasible(std::span<const std::size_t> chosen) const {
    for (std::size_t v : chosen) {
      if (!available[v]) return false;
    }
    for (const auto& c : constraints) {
      double lhs = 0.0;
      for (std::size_t v : chosen) lhs += c.coeffs[v];
      if (!satisfied(c, lhs)) return false;
    }
    return true;
  }
};

struct Selection {
  std::vector<RobotId> ids;

  std::size_t cardinality() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  friend bool operator==(const Selection&, const Selection&) = default;
};

enum class SolveStatus {
  kOptimal,      // provably minimum cardinality
  kNotCertified, // time budget hit; best incumbent returned
  kInfeasible,   // no subset satisfies the constraints
  kUnknown,      // time budget hit with no incumbent
};

inline std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kNotCertified: return "not_certified";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnknown: return "unknown";
  }
  return "unknown";
}

struct SolveResult {
  SolveStatus status = SolveStatus::kInfeasible;
  Selection selection;
  std::size_t nodes = 0;

  bool has_solution() const {
    return status == SolveStatus::kOptimal || status == SolveStatus::kNotCertified;
  }
  bool certified() const { return status == SolveStatus::kOptimal || status == SolveStatus::kInfeasible; }
};

struct SolverOptions {
  double time_limit_s = 5.0;
};

namespace detail {

class MinCardinalitySearch {
 public:
  MinCardinalitySearch(const IlpProblem& problem, const SolverOptions& options)
      : problem_(problem),
        deadline_(std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(options.time_limit_s))) {
    for (std::size_t v = 0; v < problem.n_vars(); ++v) {
      if (problem.available[v]) order_.push_back(v);
    }
    // Enumerate in ascending id order so the first hit at each depth is the
    // lexicographically smallest id set.
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      return problem.var_ids[a] < problem.var_ids[b];
    });
    build_suffix_bounds();
  }

  SolveResult run() {
    SolveResult result;
    const std::size_t n = order_.size();
    if (problem_.is_feasible({})) {
      result.status = SolveStatus::kOptimal;
      return result;
    }
    sums_.assign(problem_.constraints.size(), 0.0);
    for (std::size_t k = 1; k <= n; ++k) {
      chosen_.clear();
      if (dfs(0, k)) {
        result.status = SolveStatus::kOptimal;
        result.selection = to_selection(chosen_);
        result.nodes = nodes_;
        return result;
      }
      if (timed_out_) {
        result.nodes = nodes_;
        if (auto inc = incumbent()) {
          result.status = SolveStatus::kNotCertified;
          result.selection = *inc;
        } else {
          result.status = SolveStatus::kUnknown;
        }
        return result;
      }
    }
    result.status = SolveStatus::kInfeasible;
    result.nodes = nodes_;
    return result;
  }

 private:
  // best_[c][s][r]: most favourable sum of r coefficients of constraint c
  // among order_[s..n): the r smallest for <=, the r largest for >=.
  void build_suffix_bounds() {
    const std::size_t n = order_.size();
    best_.resize(problem_.constraints.size());
    for (std::size_t c = 0; c < problem_.constraints.size(); ++c) {
      const auto& con = problem_.constraints[c];
      best_[c].assign(n + 1, {});
      for (std::size_t s = 0; s <= n; ++s) {
        std::vector<double> tail;
        for (std::size_t q = s; q < n; ++q) tail.push_back(con.coeffs[order_[q]]);
        if (con.sense == Sense::kLessEqual) {
          std::sort(tail.begin(), tail.end());
        } else {
          std::sort(tail.begin(), tail.end(), std::greater<>());
        }
        std::vector<double> prefix(tail.size() + 1, 0.0);
        for (std::size_t q = 0; q < tail.size(); ++q) prefix[q + 1] = prefix[q] + tail[q];
        best_[c][s] = std::move(prefix);
      }
    }
  }

  bool promising(std::size_t start, std::size_t remaining) const {
    if (order_.size() - start < remaining) return false;
    for (std::size_t c = 0; c < problem_.constraints.size(); ++c) {
      if (!satisfied(problem_.constraints[c], sums_[c] + best_[c][start][remaining])) return false;
    }
    return true;
  }

  bool dfs(std::size_t start, std::size_t remaining) {
    if ((++nodes_ & 0xFFF) == 0 && std::chrono::steady_clock::now() > deadline_) timed_out_ = true;
    if (timed_out_) return false;
    if (remaining == 0) return problem_.is_feasible(chosen_);
    if (!promising(start, remaining)) return false;
    for (std::size_t q = start; q + remaining <= order_.size(); ++q) {
      std::size_t v = order_[q];
      for (std::size_t c = 0; c < sums_.size(); ++c) sums_[c] += problem_.constraints[c].coeffs[v];
      chosen_.push_back(v);
      bool found = dfs(q + 1, remaining - 1);
      if (found) return true;
      chosen_.pop_back();
      for (std::size_t c = 0; c < sums_.size(); ++c) sums_[c] -= problem_.constraints[c].coeffs[v];
      if (timed_out_) return false;
    }
    return false;
  }

  double violation(std::span<const std::size_t> chosen) const {
    double total = 0.0;
    for (const auto& c : problem_.constraints) {
      double lhs = 0.0;
      for (std::size_t v : chosen) lhs += c.coeffs[v];
      double excess = c.sense == Sense::kLessEqual ? lhs - c.rhs : c.rhs - lhs;
      if (excess > kConstraintTolerance) total += excess / std::max(1.0, std::abs(c.rhs));
    }
    return total;
  }

  // Greedy repair heuristic: add the variable that most reduces total
  // normalized violation until feasible or stuck.
  std::optional<Selection> incumbent() const {
    std::vector<std::size_t> chosen;
    std::vector<bool> used(problem_.n_vars(), false);
    while (!problem_.is_feasible(chosen)) {
      double current = violation(chosen);
      std::optional<std::size_t> best;
      double best_violation = current;
      for (std::size_t v : order_) {
        if (used[v]) continue;
        chosen.push_back(v);
        double after = violation(chosen);
        chosen.pop_back();
        if (after < best_violation) {
          best_violation = after;
          best = v;
        }
      }
      if (!best) return std::nullopt;
      used[*best] = true;
      chosen.push_back(*best);
    }
    return to_selection(chosen);
  }

  Selection to_selection(std::span<const std::size_t> chosen) const {
    Selection s;
    for (std::size_t v : chosen) s.ids.push_back(problem_.var_ids[v]);
    std::sort(s.ids.begin(), s.ids.end());
    return s;
  }

  const IlpProblem& problem_;
  std::chrono::steady_clock::time_point deadline_;
  std::vector<std::size_t> order_;
  std::vector<std::vector<std::vector<double>>> best_;
  std::vector<double> sums_;
  std::vector<std::size_t> chosen_;
  std::size_t nodes_ = 0;
  bool timed_out_ = false;
};

inline std::vector<RobotSpec> sorted_by_id(std::span<const RobotSpec> pool) {
  std::vector<RobotSpec> out(pool.begin(), pool.end());
  std::sort(out.begin(), out.end(), [](const RobotSpec& a, const RobotSpec& b) { return a.id < b.id; });
  return out;
}

}  // namespace detail

inline SolveResult solve_min_cardinality(const IlpProblem& problem, const SolverOptions& options = {}) {
  problem.validate();
  return detail::MinCardinalitySearch(problem, options).run();
}

struct InitialSelectionParams {
  double budget = 500.0;       // beta
  double alpha = 0.3;          // all-fail probability threshold
  double redundancy = 1.0;     // delta
  double domain_area = 900.0;  // <A_Q>
  double horizon = 500.0;      // T
};

/// Budget, log-reliability and area constraints over the whole pool.
inline IlpProblem build_initial_ilp(std::span<const RobotSpec> pool, const InitialSelectionParams& p) {
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) throw Error(Errc::kInvalidArgument, "alpha must lie in (0,1)");
  if (!(p.budget > 0.0)) throw Error(Errc::kInvalidArgument, "budget must be positive");
  if (!(p.horizon > 0.0)) throw Error(Errc::kInvalidArgument, "horizon must be positive");
  auto robots = detail::sorted_by_id(pool);
  IlpProblem ilp;
  LinearConstraint budget{"budget", {}, Sense::kLessEqual, p.budget};
  LinearConstraint rel{"reliability", {}, Sense::kLessEqual, std::log(p.alpha)};
  LinearConstraint area{"area", {}, Sense::kGreaterEqual, p.redundancy * p.domain_area};
  for (const RobotSpec& r : robots) {
    double fail = failure_probability(r, 0.0, p.horizon);
    if (fail <= 0.0) {
      throw Error(Errc::kDegenerateReliability,
                  "robot " + std::to_string(r.id) + " has reliability exactly 1 over the horizon");
    }
    ilp.var_ids.push_back(r.id);
    budget.coeffs.push_back(r.cost);
    rel.coeffs.push_back(std::log(fail));
    area.coeffs.push_back(r.sense_area);
  }
  ilp.constraints = {budget, rel, area};
  ilp.available.assign(robots.size(), true);
  return ilp;
}

/// alpha / prod_j (1 - R_j(T_f, T)) over the surviving robots, ages measured
/// from each robot's activation. +infinity when some survivor cannot fail.
inline double alpha_of_tf(std::span<const ActiveRobot> survivors, double alpha, double failure_time,
                          double horizon) {
  if (!(failure_time > 0.0 && failure_time < horizon)) {
    throw Error(Errc::kInvalidInterval, "need 0 < T_f < T");
  }
  double product = 1.0;
  for (const ActiveRobot& a : survivors) {
    double t0 = std::max(0.0, failure_time - a.activated_at);
    double t1 = std::max(0.0, horizon - a.activated_at);
    product *= failure_probability(a.spec, t0, t1);
  }
  if (product <= 0.0) return std::numeric_limits<double>::infinity();
  return alpha / product;
}

struct IntermediateSelectionParams {
  double alpha_tf = 1.0;          // threshold from alpha_of_tf
  double failed_area = 0.0;       // <A_f>
  double remaining_horizon = 0.0; // T - T_f
};

/// Log-reliability (unless vacuous) and area constraints restricted to the
/// robots currently available in the pool.
inline IlpProblem build_intermediate_ilp(std::span<const RobotSpec> pool,
                                         const std::vector<bool>& pool_mask,
                                         const IntermediateSelectionParams& p) {
  if (!(p.failed_area > 0.0)) throw Error(Errc::kInvalidArgument, "failed robot area must be positive");
  if (pool_mask.size() != pool.size()) throw Error(Errc::kSizeMismatch, "pool mask length != pool size");
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pool[a].id < pool[b].id; });

  const bool vacuous = !(p.alpha_tf < 1.0);
  IlpProblem ilp;
  LinearConstraint rel{"reliability", {}, Sense::kLessEqual, vacuous ? 0.0 : std::log(p.alpha_tf)};
  LinearConstraint area{"area", {}, Sense::kGreaterEqual, p.failed_area};
  const double floor_log = std::log(std::numeric_limits<double>::min());
  for (std::size_t k : idx) {
    const RobotSpec& r = pool[k];
    ilp.var_ids.push_back(r.id);
    ilp.available.push_back(pool_mask[k]);
    double fail = failure_probability(r, 0.0, std::max(0.0, p.remaining_horizon));
    rel.coeffs.push_back(fail > 0.0 ? std::max(std::log(fail), floor_log) : floor_log);
    area.coeffs.push_back(r.sense_area);
  }
  if (vacuous) {
    ilp.notes.push_back("reliability constraint vacuous (alpha(T_f) >= 1)");
    ilp.constraints = {area};
  } else {
    ilp.constraints = {rel, area};
  }
  return ilp;
}

inline void to_json(nlohmann::json& j, const IlpProblem& ilp) {
  nlohmann::json cons = nlohmann::json::array();
  for (const auto& c : ilp.constraints) {
    cons.push_back({{"name", c.name},
                    {"coeffs", c.coeffs},
                    {"sense", c.sense == Sense::kLessEqual ? "<=" : ">="},
                    {"rhs", c.rhs}});
  }
  j = {{"n_vars", ilp.n_vars()},
       {"var_ids", ilp.var_ids},
       {"objective", "min sum(x)"},
       {"constraints", cons},
       {"available", ilp.available},
       {"notes", ilp.notes}};
}

inline void to_json(nlohmann::json& j, const Selection& s) {
  j = {{"ids", s.ids}, {"cardinality", s.cardinality()}};
}

inline void to_json(nlohmann::json& j, const SolveResult& r) {
  j = {{"status", to_string(r.status)},
       {"certified", r.certified()},
       {"selection", r.selection},
       {"nodes", r.nodes}};
}

}  // namespace rescov
