// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "retrieve/geometry.hpp"
#include "retrieve/types.hpp"

namespace retrieve {

/// Cabinet outline and ground grid resolution. The cabinet occupies
/// [0, dx] x [0, dy] x [0, dz]; the front face is the y = 0 edge and the
/// gripper enters through [opening_min, opening_max] on it.
struct SceneSpec {
  Scalar dx = 0.56;
  Scalar dy = 0.86;
  Scalar dz = 0.50;
  Scalar cell = 0.08;
  Scalar opening_min = 0.12;
  Scalar opening_max = 0.44;

  Scalar opening_mid() const { return 0.5 * (opening_min + opening_max); }
  Scalar floor_diagonal() const;
  Rect2 floor() const { return {0, dx, 0, dy}; }
  void validate() const;

  bool operator==(const SceneSpec&) const = default;
};

struct ObjectState {
  ObjectId id = 0;
  Vec3 center = Vec3::Zero();
  Vec3 dims = Vec3::Zero();
  bool is_target = false;

  Vec2 center2() const { return center.head<2>(); }
  Scalar half_diagonal() const { return 0.5 * dims.head<2>().norm(); }

  bool operator==(const ObjectState& o) const {
    return id == o.id && center == o.center && dims == o.dims && is_target == o.is_target;
  }
};

struct Region {
  Vec3 center = Vec3::Zero();
  bool observed = false;

  Vec2 center2() const { return center.head<2>(); }

  bool operator==(const Region& o) const { return center == o.center && observed == o.observed; }
};

/// Planar reduction of the target grasp: gripper position plus approach yaw.
struct GraspPose {
  Vec3 position = Vec3::Zero();
  Scalar yaw = 0;

  bool operator==(const GraspPose& o) const { return position == o.position && yaw == o.yaw; }
};

struct SceneState {
  SceneSpec spec;
  Vec3 robot_base = Vec3::Zero();
  GraspPose grasp;
  std::vector<ObjectState> objects;
  std::vector<Region> regions;
  Scalar gripper_radius = 0.04;

  const ObjectState& target() const;
  const ObjectState* find(ObjectId id) const;
  ObjectState* find(ObjectId id);
  /// Non-target object ids in ascending order.
  std::vector<ObjectId> non_target_ids() const;
  std::size_t observed_count() const;

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const;

  bool operator==(const SceneState& o) const {
    return spec == o.spec && robot_base == o.robot_base && grasp == o.grasp && objects == o.objects &&
           regions == o.regions && gripper_radius == o.gripper_radius;
  }
};

struct GenConfig {
  SceneSpec spec;
  int m_min = 3;  // non-target object count range
  int m_max = 8;
  Scalar side_min = 0.04;
  Scalar side_max = 0.15;
  Scalar height_min = 0.05;
  Scalar height_max = 0.30;
  Scalar gripper_radius = 0.04;
  Scalar deep_probability = 0.8;  // P(target depth >= dy / 2)
  Scalar min_gap = 0.01;          // clearance between generated footprints
  Scalar base_offset = 0.2;       // robot base distance outside the opening
  int max_attempts = 2000;

  void validate() const;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Random confined scene; a pure function of (cfg, seed). Regions start
/// unobserved. Throws GenerationError when rejection sampling runs dry.
SceneState generate_scene(const GenConfig& cfg, std::uint64_t seed);

Rect2 footprint(const ObjectState& o);

/// Footprint the object would have if centred on `at`.
Rect2 footprint_at(const ObjectState& o, const Vec2& at);

/// Row-major (y rows, x columns) grid of `cell`-sized squares; partial cells
/// at the far edges are dropped.
std::vector<Region> region_grid(const SceneSpec& spec);

/// Square covered by a region.
Rect2 region_cell(const SceneSpec& spec, const Region& r);

bool region_occupied(const Region& r, const SceneState& s, std::optional<ObjectId> exclude_id = std::nullopt);

/// Whether `o` can rest centred at `at`: inside the walls and not overlapping
/// any other object.
bool placement_free(const SceneState& s, const ObjectState& o, const Vec2& at);

/// Cabinet walls as degenerate rectangles (axis-aligned segments): sides,
/// back, and the front-face pieces either side of the opening.
std::vector<Rect2> cabinet_walls(const SceneSpec& spec);

/// Yaw pointing from `from` toward the middle of the opening, in [-pi, pi).
Scalar yaw_toward_opening(const SceneSpec& spec, const Vec2& from);

std::string serialize_scene(const SceneState& s);
SceneState deserialize_scene(std::string_view record, std::size_t line = 0);

std::vector<SceneState> read_corpus(const std::string& path);
void write_corpus(const std::string& path, const std::vector<SceneState>& scenes);

}  // namespace retrieve
