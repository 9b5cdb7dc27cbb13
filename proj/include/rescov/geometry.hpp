#pragma once

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace rescov {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

/// Chebyshev (max-coordinate) distance; neighborhoods are balls in this norm.
inline double inf_distance(Vec2 a, Vec2 b) {
  return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

/// Axis-aligned rectangle [lo.x, hi.x] x [lo.y, hi.y].
struct Rect {
  Vec2 lo;
  Vec2 hi;

  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
  double area() const { return width() * height(); }
};

inline void to_json(nlohmann::json& j, const Vec2& v) { j = nlohmann::json::array({v.x, v.y}); }
inline void from_json(const nlohmann::json& j, Vec2& v) {
  v.x = j.at(0).get<double>();
  v.y = j.at(1).get<double>();
}

inline void to_json(nlohmann::json& j, const Rect& r) {
  j = nlohmann::json::array({r.lo.x, r.lo.y, r.hi.x, r.hi.y});
}
inline void from_json(const nlohmann::json& j, Rect& r) {
  r.lo = {j.at(0).get<double>(), j.at(1).get<double>()};
  r.hi = {j.at(2).get<double>(), j.at(3).get<double>()};
}

}  // namespace rescov
