// SPDX-License-Identifier: Apache-2.0
// Hand-built scenes and brute-force oracles shared by the tests.
#pragma once

#include <cmath>
#include <vector>

#include "retrieve/geometry.hpp"
#include "retrieve/motion.hpp"
#include "retrieve/rng.hpp"
#include "retrieve/scene.hpp"

namespace retrieve::testing {

struct Box {
  Vec2 center;
  Vec2 size;
  Scalar height = 0.1;
};

/// Target gets id 0, `others` ids 1, 2, ... in order. Regions start unobserved.
inline SceneState make_scene(const Box& target, const std::vector<Box>& others, const SceneSpec& spec = {}) {
  SceneState s;
  s.spec = spec;
  s.robot_base = Vec3{spec.opening_mid(), -0.2, 0.0};
  s.regions = region_grid(spec);
  auto add = [&](const Box& b, ObjectId id, bool target_flag) {
    s.objects.push_back({id, Vec3{b.center.x(), b.center.y(), 0.5 * b.height}, Vec3{b.size.x(), b.size.y(), b.height},
                         target_flag});
  };
  add(target, 0, true);
  for (std::size_t i = 0; i < others.size(); ++i) add(others[i], static_cast<ObjectId>(i + 1), false);
  s.grasp.position = s.objects.front().center;
  s.grasp.yaw = yaw_toward_opening(spec, target.center);
  s.validate();
  return s;
}

/// Deep target behind one wide object astride the entry-to-target line, plus
/// corner objects well away from every entry-to-target route. The blocker is
/// object 1.
inline SceneState single_blocker_scene(std::uint64_t seed) {
  Rng rng(seed);
  const SceneSpec spec;
  const Vec2 target{rng.uniform(0.22, 0.34), rng.uniform(0.6, 0.72)};
  const Vec2 entry{spec.opening_mid(), 0};
  const Scalar y = rng.uniform(0.3, 0.4);
  const Scalar x = entry.x() + (target.x() - entry.x()) * (y - entry.y()) / (target.y() - entry.y());
  std::vector<Box> others{{{x, y}, {rng.uniform(0.22, 0.3), rng.uniform(0.05, 0.09)}}};
  const Vec2 corners[] = {{0.05, 0.06}, {0.51, 0.06}, {0.05, 0.8}, {0.51, 0.8}};
  const int extra = rng.integer(1, 4);
  for (int k = 0; k < extra; ++k) others.push_back({corners[k], {0.06, 0.06}});
  return make_scene({target, {0.06, 0.06}}, others, spec);
}

/// Two side walls of objects leave one corridor to the target; object 3 plugs
/// it, so the target is unreachable until object 3 moves.
inline SceneState blocked_single_blocker_scene(std::uint64_t seed) {
  Rng rng(seed);
  const Vec2 target{rng.uniform(0.22, 0.34), rng.uniform(0.6, 0.72)};
  const Scalar px = rng.uniform(0.25, 0.31);
  const Scalar y = rng.uniform(0.3, 0.4);
  const Scalar left = px - 0.05 - 0.01;
  const Scalar right = px + 0.05 + 0.01;
  return make_scene({target, {0.06, 0.06}}, {{{0.5 * left, y}, {left, 0.08}},
                                             {{0.5 * (right + 0.56), y}, {0.56 - right, 0.08}},
                                             {{px, y}, {0.10, 0.08}}});
}

/// Two side objects leave one corridor to the target; object 3 plugs it.
/// Removing object 3 opens the corridor.
inline SceneState corridor_scene() {
  return make_scene({{0.28, 0.62}, {0.06, 0.06}},
                    {{{0.11, 0.34}, {0.22, 0.08}}, {{0.45, 0.34}, {0.22, 0.08}}, {{0.28, 0.34}, {0.10, 0.08}}});
}

/// Whether a disc of radius r swept along p touches rect, by dense sampling.
inline bool swept_hits(const Path& p, const Rect2& rect, Scalar r, Scalar spacing = 2.5e-4) {
  for (std::size_t i = 0; i + 1 < p.waypoints.size(); ++i) {
    const Vec2 a = p.waypoints[i];
    const Vec2 b = p.waypoints[i + 1];
    const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / spacing)));
    for (int k = 0; k <= n; ++k) {
      const Vec2 q = a + (b - a) * (static_cast<Scalar>(k) / n);
      const Scalar dx = std::max({rect.x_min - q.x(), 0.0, q.x() - rect.x_max});
      const Scalar dy = std::max({rect.y_min - q.y(), 0.0, q.y() - rect.y_max});
      if (std::hypot(dx, dy) <= r) return true;
    }
  }
  return false;
}

/// Independent validator: dense samples and exact point-to-rectangle
/// distances against obstacles grown by the robot's box half extents.
inline bool independently_valid(const Path& p, const ObstacleSet& obs, Scalar spacing = 5e-4) {
  const auto& rb = obs.robot;
  auto free = [&](const Vec2& q) {
    if (!obs.workspace.contains(q)) return false;
    for (const auto* set : {&obs.rects, &obs.walls}) {
      for (const auto& r : *set) {
        const Rect2 g{r.x_min - rb.half_x, r.x_max + rb.half_x, r.y_min - rb.half_y, r.y_max + rb.half_y};
        if (distance(q, g) <= rb.radius) return false;
      }
    }
    return true;
  };
  for (std::size_t i = 0; i + 1 < p.waypoints.size(); ++i) {
    const Vec2 a = p.waypoints[i], b = p.waypoints[i + 1];
    const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / spacing)));
    for (int k = 0; k <= n; ++k) {
      if (!free(a + (b - a) * (static_cast<Scalar>(k) / n))) return false;
    }
  }
  return p.waypoints.size() == 1 ? free(p.waypoints.front()) : true;
}

}  // namespace retrieve::testing
