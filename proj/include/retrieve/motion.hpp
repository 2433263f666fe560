// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "retrieve/scene.hpp"

namespace retrieve {

/// Planar gripper configuration (centre position).
using Config = Vec2;

struct Path {
  std::vector<Config> waypoints;

  const Config& start() const { return waypoints.front(); }
  const Config& goal() const { return waypoints.back(); }
  bool operator==(const Path& o) const { return waypoints == o.waypoints; }
};

/// Moving body: the core rectangle [-half_x, half_x] x [-half_y, half_y]
/// grown by `radius` (Minkowski sum). The gripper is a pure disc; a carried
/// object is its footprint rectangle.
struct RobotShape {
  Scalar radius = 0;
  Scalar half_x = 0;
  Scalar half_y = 0;

  static RobotShape disc(Scalar r) { return {r, 0, 0}; }
  static RobotShape box(Scalar hx, Scalar hy) { return {0, hx, hy}; }
};

/// Region the robot reference point may occupy: the cabinet interior plus an
/// apron in front of the opening.
struct Workspace {
  Rect2 interior;
  Rect2 apron;

  bool contains(const Config& q) const { return interior.contains(q) || apron.contains(q); }
};

/// Obstacles in the planar configuration space. Object footprints and walls
/// are stored unexpanded; `robot` records how far they are grown.
struct ObstacleSet {
  std::vector<Rect2> rects;
  std::vector<Rect2> walls;
  Workspace workspace;
  RobotShape robot;

  Scalar inflation() const { return robot.radius; }
};

struct PlanBudget {
  double max_seconds = 1.0;
  int max_iterations = 20000;

  void validate() const;
};

struct MotionConfig {
  Scalar step_size = 0.03;
  Scalar resolution = 0.005;
  Scalar apron_depth = 0.2;
  Scalar entry_depth = 0.1;  // entry config sits this far outside the opening
  int smooth_iterations = 200;
  PlanBudget budget;
};

class EndpointInCollision : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Workspace workspace(const SceneSpec& spec, const MotionConfig& cfg = {});

/// Entry configuration at the opening midpoint, outside the cabinet.
Config entry_config(const SceneSpec& spec, const MotionConfig& cfg = {});

/// Obstacles from every object except those in `exclude`, plus the walls.
ObstacleSet make_obstacles(const SceneState& s, const std::set<ObjectId>& exclude, const RobotShape& robot,
                           const MotionConfig& cfg = {});

/// Walls only; every object is ignored.
ObstacleSet walls_only(const SceneState& s, const RobotShape& robot, const MotionConfig& cfg = {});

/// Closed-set collision test: touching an expanded obstacle collides.
bool collide(const Config& q, const ObstacleSet& obs);

/// Exact swept test against every obstacle, so it reports a collision whenever
/// any sample of [a, b] would. Workspace membership is checked on samples at
/// spacing <= resolution, endpoints included.
bool segment_collides(const Config& a, const Config& b, const ObstacleSet& obs, Scalar resolution = 0.005);

/// True when every waypoint and every segment of `p` is collision-free.
bool path_valid(const Path& p, const ObstacleSet& obs, Scalar resolution = 0.005);

/// Bidirectional RRT with extend/connect. Returns nullopt when the budget
/// runs out; throws EndpointInCollision when start or goal collides.
std::optional<Path> rrt_connect(const Config& start, const Config& goal, const ObstacleSet& obs,
                                const PlanBudget& budget, std::uint64_t seed, Scalar step_size = 0.03,
                                Scalar resolution = 0.005);

/// Random shortcutting; never lengthens the path.
Path smooth(const Path& p, const ObstacleSet& obs, int iterations, std::uint64_t seed, Scalar resolution = 0.005);

Config grasp_config(const GraspPose& g);

/// Indicator I: a collision-free path from the entry config to the grasp
/// config, ignoring the target and `exclude_ids`. A grasp configuration
/// covered by another object means I = 0.
std::optional<Path> reachable(const SceneState& s, const std::set<ObjectId>& exclude_ids, const PlanBudget& budget,
                              std::uint64_t seed, const MotionConfig& cfg = {});

Scalar path_length(const Path& p);

/// |l_s - l_r| + |l_g - l_s|
Scalar move_distance(const Vec3& l_r, const Vec3& l_s, const Vec3& l_g);

}  // namespace retrieve
