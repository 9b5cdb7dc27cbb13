#pragma once

// Robot attributes, the quadratic-hazard reliability model, and roulette-wheel
// failure sampling.

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "rescov/error.hpp"

namespace rescov {

using RobotId = int;
using Rng = std::mt19937_64;

struct RobotSpec {
  RobotId id = 0;
  double cost = 1.0;
  double sense_radius = 1.0;
  double sense_area = std::numbers::pi;
  double decay = 0.0;
  double hazard_base = 0.0;
  double hazard_quad = 0.0;
  double lifespan = 1.0;

  friend bool operator==(const RobotSpec&, const RobotSpec&) = default;
};

using SpecMap = std::map<RobotId, RobotSpec>;

inline RobotSpec make_robot(RobotId id, double cost, double sense_radius, double decay,
                            double hazard_base, double hazard_quad, double lifespan = 1.0) {
  RobotSpec r;
  r.id = id;
  r.cost = cost;
  r.sense_radius = sense_radius;
  r.sense_area = std::numbers::pi * sense_radius * sense_radius;
  r.decay = decay;
  r.hazard_base = hazard_base;
  r.hazard_quad = hazard_quad;
  r.lifespan = lifespan;
  return r;
}

inline void validate(const RobotSpec& r) {
  if (!(r.cost > 0.0)) throw Error(Errc::kInvalidArgument, "robot cost must be positive");
  if (!(r.sense_radius > 0.0)) throw Error(Errc::kInvalidArgument, "sense radius must be positive");
  if (std::abs(r.sense_area - std::numbers::pi * r.sense_radius * r.sense_radius) > 1e-9) {
    throw Error(Errc::kInvalidArgument, "sense area must equal pi*radius^2");
  }
  if (!(r.decay >= 0.0) || !(r.hazard_base >= 0.0) || !(r.hazard_quad >= 0.0)) {
    throw Error(Errc::kInvalidArgument, "decay and hazard parameters must be nonnegative");
  }
  if (!(r.lifespan > 0.0)) throw Error(Errc::kInvalidArgument, "lifespan must be positive");
}

/// Integrated hazard over [t0, t1] for lambda(t) = base + quad * t^2.
inline double cumulative_hazard(const RobotSpec& r, double t0, double t1) {
  if (!(t0 >= 0.0) || !(t1 >= t0)) {
    throw Error(Errc::kInvalidInterval, "need 0 <= t0 <= t1");
  }
  return r.hazard_base * (t1 - t0) + r.hazard_quad * (t1 * t1 * t1 - t0 * t0 * t0) / 3.0;
}

/// Probability of surviving [t0, t1], times measured on the robot's own age.
inline double reliability(const RobotSpec& r, double t0, double t1) {
  return std::exp(-cumulative_hazard(r, t0, t1));
}

inline double failure_probability(const RobotSpec& r, double t0, double t1) {
  return -std::expm1(-cumulative_hazard(r, t0, t1));
}

/// Probability that every robot of the team fails in [t0, t1] (independent failures).
inline double team_failure_probability(std::span<const RobotSpec> team, double t0, double t1) {
  double p = 1.0;
  for (const RobotSpec& r : team) p *= failure_probability(r, t0, t1);
  return p;
}

struct HazardFit {
  double base = 0.0;
  double quad = 0.0;
};

/// Calibrates the hazard so that R(0, lifespan) = 1/e with a baseline rate of
/// 0.1 / lifespan; the quadratic term carries the remaining 0.9 of the hazard.
inline HazardFit fit_hazard(double lifespan) {
  if (!(lifespan > 0.0)) throw Error(Errc::kInvalidArgument, "lifespan must be positive");
  HazardFit fit;
  fit.base = 0.1 / lifespan;
  fit.quad = 3.0 * (1.0 - fit.base * lifespan) / (lifespan * lifespan * lifespan);
  return fit;
}

struct FailureEvent {
  RobotId robot_id = 0;
  double time = 0.0;

  friend bool operator==(const FailureEvent&, const FailureEvent&) = default;
};

struct ActiveRobot {
  RobotSpec spec;
  double activated_at = 0.0;
};

/// Roulette weights at instant t: failure probability over each robot's age.
inline std::vector<double> roulette_weights(std::span<const ActiveRobot> active, double t) {
  std::vector<double> weights(active.size());
  for (std::size_t k = 0; k < active.size(); ++k) {
    double age = std::max(0.0, t - active[k].activated_at);
    weights[k] = failure_probability(active[k].spec, 0.0, age);
  }
  return weights;
}

/// Picks the failed robot at a given instant by roulette wheel.
inline FailureEvent sample_failure_at(std::span<const ActiveRobot> active, double t, Rng& rng) {
  if (active.empty()) throw Error(Errc::kInvalidArgument, "no active robots to fail");
  auto weights = roulette_weights(active, t);
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw Error(Errc::kAllWeightsZero, "every active robot has zero failure probability");
  std::discrete_distribution<std::size_t> wheel(weights.begin(), weights.end());
  return {active[wheel(rng)].spec.id, t};
}

/// Draws a failure instant uniformly in (after, horizon) and then the failed
/// robot by roulette wheel over each robot's failure probability from its
/// activation to that instant. Retries the instant up to `max_retries` times
/// when every weight is zero.
inline FailureEvent sample_failure(std::span<const ActiveRobot> active, double horizon, Rng& rng,
                                   double after = 0.0, int max_retries = 32) {
  if (active.empty()) throw Error(Errc::kInvalidArgument, "no active robots to fail");
  if (!(horizon > after) || !(after >= 0.0)) {
    throw Error(Errc::kInvalidInterval, "need 0 <= after < horizon");
  }
  std::uniform_real_distribution<double> when(after, horizon);
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    double t = when(rng);
    while (t <= after) t = when(rng);
    auto weights = roulette_weights(active, t);
    double total = 0.0;
    for (double w : weights) total += w;
    if (total > 0.0) {
      std::discrete_distribution<std::size_t> wheel(weights.begin(), weights.end());
      return {active[wheel(rng)].spec.id, t};
    }
  }
  throw Error(Errc::kAllWeightsZero, "every active robot has zero failure probability");
}

inline void to_json(nlohmann::json& j, const RobotSpec& r) {
  j = {{"id", r.id},
       {"cost", r.cost},
       {"sense_radius", r.sense_radius},
       {"sense_area", r.sense_area},
       {"decay", r.decay},
       {"hazard_base", r.hazard_base},
       {"hazard_quad", r.hazard_quad},
       {"lifespan", r.lifespan}};
}

inline void from_json(const nlohmann::json& j, RobotSpec& r) {
  r.id = j.at("id").get<RobotId>();
  r.cost = j.at("cost").get<double>();
  r.sense_radius = j.at("sense_radius").get<double>();
  r.sense_area = j.contains("sense_area")
                     ? j.at("sense_area").get<double>()
                     : std::numbers::pi * r.sense_radius * r.sense_radius;
  r.decay = j.value("decay", 0.0);
  r.hazard_base = j.value("hazard_base", 0.0);
  r.hazard_quad = j.value("hazard_quad", 0.0);
  r.lifespan = j.value("lifespan", 1.0);
  validate(r);
}

inline void to_json(nlohmann::json& j, const FailureEvent& e) {
  j = {{"robot_id", e.robot_id}, {"time", e.time}};
}

}  // namespace rescov
