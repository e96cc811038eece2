#pragma once

// 2D vectors, simple polygon rooms, signed distance queries.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "rotorloc/errors.hpp"

namespace rotorloc {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  Vec2 operator-() const { return {-x, -y}; }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::sqrt(norm2(a)); }

inline Vec2 rotated(Vec2 v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

struct Bounds {
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
};

// Walls are the closed chain (v[i], v[(i+1) % n]); vertices run
// counterclockwise so wall normals computed as left-perpendiculars of the
// edge directions point into the room.
struct Room {
  std::vector<Vec2> vertices;
  std::vector<double> wall_reflection;
  double speed_of_sound = 343.0;
  int max_reflection_order = 3;

  std::size_t num_walls() const { return vertices.size(); }
  Vec2 wall_start(std::size_t i) const { return vertices[i]; }
  Vec2 wall_end(std::size_t i) const {
    return vertices[(i + 1) % vertices.size()];
  }
};

inline double signed_area(const std::vector<Vec2>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 p = poly[i];
    const Vec2 q = poly[(i + 1) % poly.size()];
    a += cross(p, q);
  }
  return 0.5 * a;
}

namespace detail {

inline int orientation_sign(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross(b - a, c - a);
  if (v > 0.0) return 1;
  if (v < 0.0) return -1;
  return 0;
}

inline bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

// Any contact between closed segments counts as an intersection.
inline bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const int o1 = orientation_sign(a, b, c);
  const int o2 = orientation_sign(a, b, d);
  const int o3 = orientation_sign(c, d, a);
  const int o4 = orientation_sign(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

inline double point_segment_dist2(Vec2 p, Vec2 a, Vec2 b, Vec2* nearest) {
  const Vec2 ab = b - a;
  const double l2 = norm2(ab);
  double t = l2 > 0.0 ? dot(p - a, ab) / l2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Vec2 q = a + ab * t;
  if (nearest != nullptr) *nearest = q;
  return norm2(p - q);
}

}  // namespace detail

inline void validate_room(const Room& room) {
  if (room.vertices.size() < 3) {
    throw InvalidRoom("room needs at least 3 vertices");
  }
  if (room.wall_reflection.size() != room.vertices.size()) {
    throw InvalidRoom("need one reflection coefficient per wall");
  }
  for (double r : room.wall_reflection) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw InvalidRoom("reflection coefficients must lie in [0, 1]");
    }
  }
  if (!(room.speed_of_sound > 0.0)) {
    throw InvalidRoom("speed of sound must be positive");
  }
  if (room.max_reflection_order < 0) {
    throw InvalidRoom("reflection order must be nonnegative");
  }
  for (std::size_t i = 0; i < room.num_walls(); ++i) {
    if (norm2(room.wall_end(i) - room.wall_start(i)) == 0.0) {
      throw InvalidRoom("degenerate wall of zero length");
    }
  }
  if (signed_area(room.vertices) <= 0.0) {
    throw InvalidRoom("vertices must wind counterclockwise");
  }
  const std::size_t n = room.num_walls();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (detail::segments_intersect(room.wall_start(i), room.wall_end(i),
                                     room.wall_start(j), room.wall_end(j))) {
        throw InvalidRoom("walls intersect; polygon must be simple");
      }
    }
  }
}

inline bool point_in_polygon(const std::vector<Vec2>& poly, Vec2 p) {
  bool inside = false;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % poly.size()];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double xint = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < xint) inside = !inside;
    }
  }
  return inside;
}

// Negative inside the room, positive outside, zero on the boundary.
inline double sdf(const Room& room, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < room.num_walls(); ++i) {
    best = std::min(best, detail::point_segment_dist2(p, room.wall_start(i),
                                                      room.wall_end(i), nullptr));
  }
  const double d = std::sqrt(best);
  return point_in_polygon(room.vertices, p) ? -d : d;
}

// Unit gradient of sdf, i.e. the outward direction of steepest ascent.
// On (or numerically at) the boundary falls back to the outward normal of
// the nearest wall.
inline Vec2 sdf_gradient(const Room& room, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  Vec2 nearest;
  std::size_t wall = 0;
  for (std::size_t i = 0; i < room.num_walls(); ++i) {
    Vec2 q;
    const double d2 =
        detail::point_segment_dist2(p, room.wall_start(i), room.wall_end(i), &q);
    if (d2 < best) {
      best = d2;
      nearest = q;
      wall = i;
    }
  }
  const double d = std::sqrt(best);
  if (d < 1e-12) {
    const Vec2 e = room.wall_end(wall) - room.wall_start(wall);
    const Vec2 inward{-e.y, e.x};
    return -inward / norm(inward);
  }
  const Vec2 dir = (p - nearest) / d;
  return point_in_polygon(room.vertices, p) ? -dir : dir;
}

inline Bounds room_bounds(const Room& room) {
  Bounds b;
  b.xmin = b.xmax = room.vertices.front().x;
  b.ymin = b.ymax = room.vertices.front().y;
  for (const Vec2& v : room.vertices) {
    b.xmin = std::min(b.xmin, v.x);
    b.xmax = std::max(b.xmax, v.x);
    b.ymin = std::min(b.ymin, v.y);
    b.ymax = std::max(b.ymax, v.y);
  }
  return b;
}

inline Vec2 polygon_centroid(const std::vector<Vec2>& poly) {
  double a = 0.0;
  Vec2 c;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 p = poly[i];
    const Vec2 q = poly[(i + 1) % poly.size()];
    const double w = cross(p, q);
    a += w;
    c += (p + q) * w;
  }
  return c / (3.0 * a);
}

inline Room make_rectangle_room(double width, double height, double reflection,
                                double speed_of_sound = 343.0,
                                int max_reflection_order = 3) {
  Room room;
  room.vertices = {{0.0, 0.0}, {width, 0.0}, {width, height}, {0.0, height}};
  room.wall_reflection.assign(4, reflection);
  room.speed_of_sound = speed_of_sound;
  room.max_reflection_order = max_reflection_order;
  validate_room(room);
  return room;
}

}  // namespace rotorloc
