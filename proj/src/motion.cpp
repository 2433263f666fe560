// SPDX-License-Identifier: Apache-2.0
#include "retrieve/motion.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "retrieve/rng.hpp"

namespace retrieve {

void PlanBudget::validate() const {
  if (!(max_seconds > 0) || max_iterations <= 0) throw std::invalid_argument("plan budget must be positive");
}

Workspace workspace(const SceneSpec& spec, const MotionConfig& cfg) {
  return {spec.floor(), {spec.opening_min, spec.opening_max, -cfg.apron_depth, 0}};
}

Config entry_config(const SceneSpec& spec, const MotionConfig& cfg) { return {spec.opening_mid(), -cfg.entry_depth}; }

ObstacleSet make_obstacles(const SceneState& s, const std::set<ObjectId>& exclude, const RobotShape& robot,
                           const MotionConfig& cfg) {
  ObstacleSet obs = walls_only(s, robot, cfg);
  for (const auto& o : s.objects) {
    if (!exclude.contains(o.id)) obs.rects.push_back(footprint(o));
  }
  return obs;
}

ObstacleSet walls_only(const SceneState& s, const RobotShape& robot, const MotionConfig& cfg) {
  ObstacleSet obs;
  obs.walls = cabinet_walls(s.spec);
  obs.workspace = workspace(s.spec, cfg);
  obs.robot = robot;
  return obs;
}

bool collide(const Config& q, const ObstacleSet& obs) {
  if (!obs.workspace.contains(q)) return true;
  const Scalar r = obs.robot.radius;
  if (obs.robot.half_x == 0 && obs.robot.half_y == 0) {
    for (const auto& rect : obs.rects) {
      if (distance(q, rect) <= r) return true;
    }
    for (const auto& wall : obs.walls) {
      if (distance(q, wall) <= r) return true;
    }
    return false;
  }
  const Rect2 body = Rect2::centered(q, obs.robot.half_x, obs.robot.half_y);
  for (const auto& rect : obs.rects) {
    if (distance(body, rect) <= r) return true;
  }
  for (const auto& wall : obs.walls) {
    if (distance(body, wall) <= r) return true;
  }
  return false;
}

bool segment_collides(const Config& a, const Config& b, const ObstacleSet& obs, Scalar resolution) {
  if (!(resolution > 0)) throw std::invalid_argument("resolution must be positive");
  // Obstacles: exact swept test. A box robot against a rectangle is its centre
  // against the rectangle grown by the box half extents.
  const Scalar r = obs.robot.radius;
  auto hits = [&](const Rect2& rect) {
    const Rect2 grown{rect.x_min - obs.robot.half_x, rect.x_max + obs.robot.half_x, rect.y_min - obs.robot.half_y,
                      rect.y_max + obs.robot.half_y};
    return segment_rect_distance(a, b, grown) <= r;
  };
  if (std::any_of(obs.rects.begin(), obs.rects.end(), hits)) return true;
  if (std::any_of(obs.walls.begin(), obs.walls.end(), hits)) return true;
  // Workspace membership is sampled.
  const Scalar len = (b - a).norm();
  const auto n = std::max<long>(1, static_cast<long>(std::ceil(len / resolution)));
  for (long i = 0; i <= n; ++i) {
    const Scalar t = static_cast<Scalar>(i) / static_cast<Scalar>(n);
    if (!obs.workspace.contains(a + t * (b - a))) return true;
  }
  return false;
}

bool path_valid(const Path& p, const ObstacleSet& obs, Scalar resolution) {
  if (p.waypoints.size() < 2) return false;
  for (std::size_t i = 0; i + 1 < p.waypoints.size(); ++i) {
    if (p.waypoints[i] == p.waypoints[i + 1]) return false;
    if (segment_collides(p.waypoints[i], p.waypoints[i + 1], obs, resolution)) return false;
  }
  return true;
}

namespace {

/// Uniform-grid nearest-neighbour index over tree nodes.
class NearestGrid {
 public:
  NearestGrid(const Rect2& bounds, Scalar cell) : bounds_(bounds), cell_(cell) {
    nx_ = std::max(1, static_cast<int>(std::ceil(bounds.width() / cell)));
    ny_ = std::max(1, static_cast<int>(std::ceil(bounds.height() / cell)));
    buckets_.resize(static_cast<std::size_t>(nx_ * ny_));
  }

  void insert(int index, const Config& q) { buckets_[bucket(q)].push_back(index); }

  /// Lowest-index node among the closest ones.
  int nearest(const Config& q, const std::vector<Config>& nodes) const {
    const int cx = clamp_x(q), cy = clamp_y(q);
    int best = -1;
    Scalar best_d2 = std::numeric_limits<Scalar>::infinity();
    const int max_ring = std::max(nx_, ny_);
    for (int ring = 0; ring <= max_ring; ++ring) {
      for (int iy = cy - ring; iy <= cy + ring; ++iy) {
        if (iy < 0 || iy >= ny_) continue;
        const bool edge_row = iy == cy - ring || iy == cy + ring;
        for (int ix = cx - ring; ix <= cx + ring; ix += (edge_row ? 1 : 2 * std::max(ring, 1))) {
          if (ix < 0 || ix >= nx_) continue;
          for (int idx : buckets_[static_cast<std::size_t>(iy * nx_ + ix)]) {
            const Scalar d2 = (nodes[static_cast<std::size_t>(idx)] - q).squaredNorm();
            if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
              best_d2 = d2;
              best = idx;
            }
          }
        }
      }
      // Cells beyond this ring are at least ring * cell away.
      if (best >= 0 && std::sqrt(best_d2) <= ring * cell_) break;
    }
    return best;
  }

 private:
  int clamp_x(const Config& q) const {
    return std::clamp(static_cast<int>(std::floor((q.x() - bounds_.x_min) / cell_)), 0, nx_ - 1);
  }
  int clamp_y(const Config& q) const {
    return std::clamp(static_cast<int>(std::floor((q.y() - bounds_.y_min) / cell_)), 0, ny_ - 1);
  }
  std::size_t bucket(const Config& q) const { return static_cast<std::size_t>(clamp_y(q) * nx_ + clamp_x(q)); }

  Rect2 bounds_;
  Scalar cell_;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

struct Tree {
  std::vector<Config> nodes;
  std::vector<int> parent;
  NearestGrid grid;

  Tree(const Config& root, const Rect2& bounds, Scalar cell) : grid(bounds, cell) { add(root, -1); }

  int add(const Config& q, int par) {
    nodes.push_back(q);
    parent.push_back(par);
    const int idx = static_cast<int>(nodes.size()) - 1;
    grid.insert(idx, q);
    return idx;
  }

  std::vector<Config> branch(int idx) const {
    std::vector<Config> out;
    for (int i = idx; i >= 0; i = parent[static_cast<std::size_t>(i)]) out.push_back(nodes[static_cast<std::size_t>(i)]);
    return out;  // leaf to root
  }
};

enum class Extend { Trapped, Advanced, Reached };

Rect2 bounding(const Workspace& ws) {
  return {std::min(ws.interior.x_min, ws.apron.x_min), std::max(ws.interior.x_max, ws.apron.x_max),
          std::min(ws.interior.y_min, ws.apron.y_min), std::max(ws.interior.y_max, ws.apron.y_max)};
}

void push_distinct(std::vector<Config>& pts, const Config& q) {
  if (pts.empty() || pts.back() != q) pts.push_back(q);
}

}  // namespace

std::optional<Path> rrt_connect(const Config& start, const Config& goal, const ObstacleSet& obs,
                                const PlanBudget& budget, std::uint64_t seed, Scalar step_size, Scalar resolution) {
  budget.validate();
  if (collide(start, obs)) throw EndpointInCollision("start configuration in collision");
  if (collide(goal, obs)) throw EndpointInCollision("goal configuration in collision");
  if (start == goal) throw std::invalid_argument("start and goal coincide");

  const Rect2 box = bounding(obs.workspace);
  const Scalar cell = std::max(step_size, Scalar(0.02));
  Tree a(start, box, cell), b(goal, box, cell);
  Tree* grow = &a;
  Tree* other = &b;
  Rng rng(seed);

  auto extend = [&](Tree& t, const Config& target, int& out) {
    const int near = t.grid.nearest(target, t.nodes);
    const Config from = t.nodes[static_cast<std::size_t>(near)];
    const Vec2 delta = target - from;
    const Scalar d = delta.norm();
    if (d == 0) {
      out = near;
      return Extend::Reached;
    }
    const bool reach = d <= step_size;
    const Config q = reach ? target : Config(from + (step_size / d) * delta);
    if (collide(q, obs) || segment_collides(from, q, obs, resolution)) return Extend::Trapped;
    out = t.add(q, near);
    return reach ? Extend::Reached : Extend::Advanced;
  };

  auto sample = [&] {
    for (;;) {
      const Config q{rng.uniform(box.x_min, box.x_max), rng.uniform(box.y_min, box.y_max)};
      if (obs.workspace.contains(q)) return q;
    }
  };

  const auto t0 = std::chrono::steady_clock::now();
  for (int it = 0; it < budget.max_iterations; ++it) {
    if ((it & 63) == 0 && it > 0) {
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
      if (dt.count() > budget.max_seconds) break;
    }
    int added = -1;
    if (extend(*grow, sample(), added) != Extend::Trapped) {
      const Config q_new = grow->nodes[static_cast<std::size_t>(added)];
      int joined = -1;
      Extend st;
      do {
        st = extend(*other, q_new, joined);
      } while (st == Extend::Advanced);
      if (st == Extend::Reached) {
        auto from_a = a.branch(grow == &a ? added : joined);  // leaf to start
        auto from_b = b.branch(grow == &a ? joined : added);  // leaf to goal
        std::vector<Config> pts;
        for (auto it2 = from_a.rbegin(); it2 != from_a.rend(); ++it2) push_distinct(pts, *it2);
        for (const auto& q : from_b) push_distinct(pts, q);
        if (pts.size() < 2) pts.push_back(goal);
        return Path{std::move(pts)};
      }
    }
    std::swap(grow, other);
  }
  return std::nullopt;
}

Scalar path_length(const Path& p) {
  Scalar len = 0;
  for (std::size_t i = 0; i + 1 < p.waypoints.size(); ++i) len += (p.waypoints[i + 1] - p.waypoints[i]).norm();
  return len;
}

Path smooth(const Path& p, const ObstacleSet& obs, int iterations, std::uint64_t seed, Scalar resolution) {
  Path cur = p;
  Rng rng(seed);
  for (int it = 0; it < iterations; ++it) {
    const std::size_t n = cur.waypoints.size();
    if (n < 3) break;
    // Cumulative arc length at each waypoint.
    std::vector<Scalar> acc(n, 0);
    for (std::size_t i = 1; i < n; ++i) acc[i] = acc[i - 1] + (cur.waypoints[i] - cur.waypoints[i - 1]).norm();
    const Scalar total = acc.back();
    Scalar u1 = rng.uniform(0, total), u2 = rng.uniform(0, total);
    if (u1 > u2) std::swap(u1, u2);
    auto locate = [&](Scalar u) {
      const auto k = static_cast<std::size_t>(std::upper_bound(acc.begin(), acc.end(), u) - acc.begin());
      const std::size_t seg = std::clamp<std::size_t>(k, 1, n - 1) - 1;  // segment [seg, seg + 1]
      const Scalar len = acc[seg + 1] - acc[seg];
      const Scalar t = len > 0 ? (u - acc[seg]) / len : 0;
      return std::pair{seg, Config(cur.waypoints[seg] + t * (cur.waypoints[seg + 1] - cur.waypoints[seg]))};
    };
    const auto [s1, p1] = locate(u1);
    const auto [s2, p2] = locate(u2);
    if (s1 == s2) continue;
    if (segment_collides(p1, p2, obs, resolution)) continue;
    std::vector<Config> pts;
    for (std::size_t i = 0; i <= s1; ++i) push_distinct(pts, cur.waypoints[i]);
    push_distinct(pts, p1);
    push_distinct(pts, p2);
    for (std::size_t i = s2 + 1; i < n; ++i) push_distinct(pts, cur.waypoints[i]);
    Path next{std::move(pts)};
    if (next.waypoints.size() >= 2 && path_length(next) < path_length(cur)) cur = std::move(next);
  }
  return cur;
}

Config grasp_config(const GraspPose& g) { return g.position.head<2>(); }

std::optional<Path> reachable(const SceneState& s, const std::set<ObjectId>& exclude_ids, const PlanBudget& budget,
                              std::uint64_t seed, const MotionConfig& cfg) {
  std::set<ObjectId> ex = exclude_ids;
  ex.insert(s.target().id);
  const ObstacleSet obs = make_obstacles(s, ex, RobotShape::disc(s.gripper_radius), cfg);
  const Config goal = grasp_config(s.grasp);
  if (collide(goal, obs)) return std::nullopt;
  return rrt_connect(entry_config(s.spec, cfg), goal, obs, budget, seed, cfg.step_size, cfg.resolution);
}

Scalar move_distance(const Vec3& l_r, const Vec3& l_s, const Vec3& l_g) { return (l_s - l_r).norm() + (l_g - l_s).norm(); }

}  // namespace retrieve
