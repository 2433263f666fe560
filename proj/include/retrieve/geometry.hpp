// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>

#include "retrieve/types.hpp"

namespace retrieve {

/// Axis-aligned rectangle in the ground plane. Degenerate rectangles (zero
/// width or height) are allowed and represent axis-aligned segments.
struct Rect2 {
  Scalar x_min = 0, x_max = 0, y_min = 0, y_max = 0;

  static Rect2 centered(const Vec2& c, Scalar half_x, Scalar half_y) {
    return {c.x() - half_x, c.x() + half_x, c.y() - half_y, c.y() + half_y};
  }

  Scalar width() const { return x_max - x_min; }
  Scalar height() const { return y_max - y_min; }
  Scalar area() const { return width() * height(); }
  Vec2 center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }

  Rect2 inflated(Scalar by) const { return {x_min - by, x_max + by, y_min - by, y_max + by}; }

  bool contains(const Vec2& p) const {
    return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max;
  }

  std::array<Vec2, 4> corners() const {
    return {Vec2{x_min, y_min}, Vec2{x_max, y_min}, Vec2{x_max, y_max}, Vec2{x_min, y_max}};
  }

  bool operator==(const Rect2&) const = default;
};

/// True when the interiors overlap (positive-area intersection).
bool overlaps(const Rect2& a, const Rect2& b);

/// Euclidean distance from a point to a rectangle (zero inside).
Scalar distance(const Vec2& p, const Rect2& r);

/// Euclidean distance between two rectangles (zero when they touch or overlap).
Scalar distance(const Rect2& a, const Rect2& b);

/// Euclidean distance from a point to the segment [a, b].
Scalar distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b);

/// Exact distance between the segment [a, b] and a rectangle.
Scalar segment_rect_distance(const Vec2& a, const Vec2& b, const Rect2& r);

/// Parameter t in [0, 1] where segment [a, b] first meets segment [c, d], if
/// they intersect (collinear overlaps report the first shared point).
std::optional<Scalar> segment_intersection(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);

}  // namespace retrieve
