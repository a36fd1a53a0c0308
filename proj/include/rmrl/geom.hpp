#pragma once

#include <algorithm>
#include <cmath>

namespace rmrl {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::sqrt(x * x + y * y); }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

inline Vec2 clamp_to_unit(const Vec2& p) {
  return {std::clamp(p.x, 0.0, 1.0), std::clamp(p.y, 0.0, 1.0)};
}

/// Distance from point p to the segment [a, b].
inline double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

enum class GoalKind { Point, InitialState };

/// A goal is always a concrete target point; InitialState marks goals drawn
/// from the designated reset region (the backward phase of FB training).
struct GoalSpec {
  GoalKind kind = GoalKind::Point;
  Vec2 pos;

  bool operator==(const GoalSpec& o) const {
    return kind == o.kind && pos == o.pos;
  }
};

}  // namespace rmrl
