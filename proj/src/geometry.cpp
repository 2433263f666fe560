// SPDX-License-Identifier: Apache-2.0
#include "retrieve/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace retrieve {

bool overlaps(const Rect2& a, const Rect2& b) {
  return a.x_min < b.x_max && b.x_min < a.x_max && a.y_min < b.y_max && b.y_min < a.y_max;
}

Scalar distance(const Vec2& p, const Rect2& r) {
  const Scalar dx = std::max({r.x_min - p.x(), Scalar(0), p.x() - r.x_max});
  const Scalar dy = std::max({r.y_min - p.y(), Scalar(0), p.y() - r.y_max});
  return std::hypot(dx, dy);
}

Scalar distance(const Rect2& a, const Rect2& b) {
  const Scalar dx = std::max({b.x_min - a.x_max, Scalar(0), a.x_min - b.x_max});
  const Scalar dy = std::max({b.y_min - a.y_max, Scalar(0), a.y_min - b.y_max});
  return std::hypot(dx, dy);
}

Scalar distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const Scalar len2 = ab.squaredNorm();
  if (len2 == 0) return (p - a).norm();
  const Scalar t = std::clamp((p - a).dot(ab) / len2, Scalar(0), Scalar(1));
  return (p - (a + t * ab)).norm();
}

namespace {

// Liang-Barsky clip: does the segment touch the closed rectangle?
bool segment_touches_rect(const Vec2& a, const Vec2& b, const Rect2& r) {
  Scalar t0 = 0, t1 = 1;
  const Vec2 d = b - a;
  const std::array<Scalar, 4> p{-d.x(), d.x(), -d.y(), d.y()};
  const std::array<Scalar, 4> q{a.x() - r.x_min, r.x_max - a.x(), a.y() - r.y_min, r.y_max - a.y()};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0) {
      if (q[i] < 0) return false;
    } else {
      const Scalar t = q[i] / p[i];
      if (p[i] < 0) {
        t0 = std::max(t0, t);
      } else {
        t1 = std::min(t1, t);
      }
      if (t0 > t1) return false;
    }
  }
  return true;
}

}  // namespace

Scalar segment_rect_distance(const Vec2& a, const Vec2& b, const Rect2& r) {
  if (segment_touches_rect(a, b, r)) return 0;
  // Disjoint convex sets: the minimum is attained at a vertex of one of them.
  Scalar best = std::min(distance(a, r), distance(b, r));
  for (const auto& c : r.corners()) best = std::min(best, distance_to_segment(c, a, b));
  return best;
}

std::optional<Scalar> segment_intersection(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const Vec2 r = b - a;
  const Vec2 s = d - c;
  auto cross = [](const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); };
  const Scalar denom = cross(r, s);
  const Vec2 ac = c - a;
  if (denom == 0) {
    if (cross(ac, r) != 0) return std::nullopt;  // parallel, not collinear
    const Scalar rr = r.squaredNorm();
    if (rr == 0) return std::nullopt;
    Scalar t0 = ac.dot(r) / rr;
    Scalar t1 = t0 + s.dot(r) / rr;
    if (t0 > t1) std::swap(t0, t1);
    if (t1 < 0 || t0 > 1) return std::nullopt;
    return std::max(Scalar(0), t0);
  }
  const Scalar t = cross(ac, s) / denom;
  const Scalar u = cross(ac, r) / denom;
  if (t < 0 || t > 1 || u < 0 || u > 1) return std::nullopt;
  return t;
}

}  // namespace retrieve
