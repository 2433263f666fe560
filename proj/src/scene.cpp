// SPDX-License-Identifier: Apache-2.0
#include "retrieve/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "retrieve/rng.hpp"

namespace retrieve {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

bool finite(const Vec3& v) { return v.allFinite(); }

}  // namespace

Scalar SceneSpec::floor_diagonal() const { return std::hypot(dx, dy); }

void SceneSpec::validate() const {
  require(dx > 0 && dy > 0 && dz > 0, "scene dims must be positive");
  require(cell > 0 && cell <= std::min(dx, dy), "cell must be in (0, min(dx, dy)]");
  require(opening_min >= 0 && opening_max <= dx && opening_min < opening_max, "opening must lie within [0, dx]");
}

void GenConfig::validate() const {
  spec.validate();
  require(m_min >= 1 && m_max >= m_min, "object count range is empty");
  require(side_min > 0 && side_max >= side_min, "side range is empty");
  require(height_min > 0 && height_max >= height_min && height_max <= spec.dz, "height range invalid");
  require(gripper_radius > 0, "gripper radius must be positive");
  require(2 * gripper_radius < spec.opening_max - spec.opening_min, "opening narrower than the gripper");
  require(deep_probability >= 0 && deep_probability <= 1, "deep probability outside [0, 1]");
  require(min_gap >= 0, "min gap must be nonnegative");
  require(max_attempts > 0, "max attempts must be positive");
}

const ObjectState& SceneState::target() const {
  for (const auto& o : objects) {
    if (o.is_target) return o;
  }
  throw std::invalid_argument("scene has no target object");
}

const ObjectState* SceneState::find(ObjectId id) const {
  for (const auto& o : objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

ObjectState* SceneState::find(ObjectId id) {
  for (auto& o : objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

std::vector<ObjectId> SceneState::non_target_ids() const {
  std::vector<ObjectId> ids;
  for (const auto& o : objects) {
    if (!o.is_target) ids.push_back(o.id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::size_t SceneState::observed_count() const {
  return static_cast<std::size_t>(std::count_if(regions.begin(), regions.end(), [](const Region& r) { return r.observed; }));
}

void SceneState::validate() const {
  spec.validate();
  require(gripper_radius > 0, "gripper radius must be positive");
  require(finite(robot_base) && finite(grasp.position) && std::isfinite(grasp.yaw), "non-finite pose");
  require(grasp.yaw >= -std::numbers::pi && grasp.yaw < std::numbers::pi, "grasp yaw outside [-pi, pi)");
  const Rect2 floor = spec.floor();
  require(floor.contains(grasp.position.head<2>()) && grasp.position.z() >= 0 && grasp.position.z() <= spec.dz,
          "grasp outside the cabinet");
  int targets = 0;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& o = objects[i];
    require(finite(o.center) && finite(o.dims), "non-finite object state");
    require((o.dims.array() > 0).all(), "object dims must be positive");
    const Rect2 fp = footprint(o);
    require(fp.x_min >= 0 && fp.x_max <= spec.dx && fp.y_min >= 0 && fp.y_max <= spec.dy, "object outside the walls");
    require(o.center.z() - 0.5 * o.dims.z() == 0 && o.dims.z() <= spec.dz, "object not resting on the floor");
    targets += o.is_target ? 1 : 0;
    for (std::size_t j = 0; j < i; ++j) {
      require(objects[j].id != o.id, "duplicate object id");
      require(!overlaps(footprint(objects[j]), fp), "object footprints overlap");
    }
  }
  require(targets == 1, "scene needs exactly one target");
  const auto grid = region_grid(spec);
  require(grid.size() == regions.size(), "region list does not match the grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(grid[i].center == regions[i].center, "region centre off the grid");
  }
}

Rect2 footprint(const ObjectState& o) { return footprint_at(o, o.center2()); }

Rect2 footprint_at(const ObjectState& o, const Vec2& at) {
  return Rect2::centered(at, 0.5 * o.dims.x(), 0.5 * o.dims.y());
}

std::vector<Region> region_grid(const SceneSpec& spec) {
  spec.validate();
  const auto nx = static_cast<int>(std::floor(spec.dx / spec.cell + 1e-9));
  const auto ny = static_cast<int>(std::floor(spec.dy / spec.cell + 1e-9));
  std::vector<Region> grid;
  grid.reserve(static_cast<std::size_t>(nx * ny));
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      grid.push_back({Vec3{(ix + 0.5) * spec.cell, (iy + 0.5) * spec.cell, 0.0}, false});
    }
  }
  return grid;
}

Rect2 region_cell(const SceneSpec& spec, const Region& r) {
  return Rect2::centered(r.center2(), 0.5 * spec.cell, 0.5 * spec.cell);
}

bool region_occupied(const Region& r, const SceneState& s, std::optional<ObjectId> exclude_id) {
  const Rect2 cell = region_cell(s.spec, r);
  return std::any_of(s.objects.begin(), s.objects.end(), [&](const ObjectState& o) {
    return (!exclude_id || o.id != *exclude_id) && overlaps(cell, footprint(o));
  });
}

bool placement_free(const SceneState& s, const ObjectState& o, const Vec2& at) {
  const Rect2 fp = footprint_at(o, at);
  if (fp.x_min < 0 || fp.x_max > s.spec.dx || fp.y_min < 0 || fp.y_max > s.spec.dy) return false;
  return std::none_of(s.objects.begin(), s.objects.end(),
                      [&](const ObjectState& other) { return other.id != o.id && overlaps(fp, footprint(other)); });
}

std::vector<Rect2> cabinet_walls(const SceneSpec& spec) {
  std::vector<Rect2> walls{
      {0, 0, 0, spec.dy},
      {spec.dx, spec.dx, 0, spec.dy},
      {0, spec.dx, spec.dy, spec.dy},
  };
  if (spec.opening_min > 0) walls.push_back({0, spec.opening_min, 0, 0});
  if (spec.opening_max < spec.dx) walls.push_back({spec.opening_max, spec.dx, 0, 0});
  return walls;
}

Scalar yaw_toward_opening(const SceneSpec& spec, const Vec2& from) {
  Scalar yaw = std::atan2(0.0 - from.y(), spec.opening_mid() - from.x());
  if (yaw >= std::numbers::pi) yaw -= 2 * std::numbers::pi;
  return yaw;
}

SceneState generate_scene(const GenConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const SceneSpec& spec = cfg.spec;
  const Scalar r = cfg.gripper_radius;

  SceneState s;
  s.spec = spec;
  s.gripper_radius = r;
  s.robot_base = Vec3{spec.opening_mid(), -cfg.base_offset, 0.0};
  s.regions = region_grid(spec);

  const int m = rng.integer(cfg.m_min, cfg.m_max);
  auto random_dims = [&] {
    return Vec3{rng.uniform(cfg.side_min, cfg.side_max), rng.uniform(cfg.side_min, cfg.side_max),
                rng.uniform(cfg.height_min, cfg.height_max)};
  };

  // Target: keep its centre at least one gripper radius (plus margin) off the
  // walls so the grasp configuration is free once the clutter is removed.
  {
    const bool deep = rng.uniform() < cfg.deep_probability;
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_attempts && !placed; ++attempt) {
      const Vec3 dims = random_dims();
      const Scalar margin_x = std::max(0.5 * dims.x(), r + 1e-3);
      const Scalar margin_y = std::max(0.5 * dims.y(), r + 1e-3);
      if (2 * margin_x >= spec.dx || 2 * margin_y >= spec.dy) continue;
      const Scalar y_lo = deep ? std::max(margin_y, 0.5 * spec.dy) : margin_y;
      const Scalar y_hi = spec.dy - margin_y;
      if (y_lo > y_hi) continue;
      const Vec2 c{rng.uniform(margin_x, spec.dx - margin_x), rng.uniform(y_lo, y_hi)};
      s.objects.push_back({0, Vec3{c.x(), c.y(), 0.5 * dims.z()}, dims, true});
      placed = true;
    }
    if (!placed) throw GenerationError("could not place the target object");
  }

  for (int k = 1; k <= m; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_attempts && !placed; ++attempt) {
      const Vec3 dims = random_dims();
      const Scalar hx = 0.5 * dims.x(), hy = 0.5 * dims.y();
      const Vec2 c{rng.uniform(hx, spec.dx - hx), rng.uniform(hy, spec.dy - hy)};
      const Rect2 fp = Rect2::centered(c, hx, hy);
      const bool clear = std::all_of(s.objects.begin(), s.objects.end(),
                                     [&](const ObjectState& o) { return distance(fp, footprint(o)) >= cfg.min_gap; });
      if (!clear) continue;
      s.objects.push_back({k, Vec3{c.x(), c.y(), 0.5 * dims.z()}, dims, false});
      placed = true;
    }
    if (!placed) throw GenerationError("could not place non-target object " + std::to_string(k));
  }

  const ObjectState& t = s.objects.front();
  s.grasp.position = t.center;
  s.grasp.yaw = yaw_toward_opening(spec, t.center2());
  s.validate();
  return s;
}

}  // namespace retrieve
