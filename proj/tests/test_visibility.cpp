// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <numbers>

#include "retrieve/geometry.hpp"
#include "retrieve/visibility.hpp"
#include "support.hpp"

using namespace retrieve;
using retrieve::testing::make_scene;

namespace {

std::size_t region_at(const SceneState& s, Scalar x, Scalar y) {
  for (std::size_t i = 0; i < s.regions.size(); ++i) {
    if ((s.regions[i].center2() - Vec2{x, y}).norm() < 1e-9) return i;
  }
  FAIL("no region centred at the requested point");
  return 0;
}

// Sightline from a viewpoint to a point, blocked when it passes through a footprint.
bool sightline_blocked(const Viewpoint& vp, const Vec2& p, const SceneState& s) {
  for (const auto& o : s.objects) {
    if (segment_rect_distance(vp.position.head<2>(), p, footprint(o)) == 0) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("an empty cabinet is fully observed from one wide centred viewpoint") {
  SceneState s = make_scene({{0.28, 0.7}, {0.06, 0.06}}, {});
  s.objects.clear();
  Viewpoint vp;
  vp.position = Vec3{s.spec.opening_mid(), 0, 0};
  vp.fov_half_angle = std::numbers::pi / 2;
  const SceneState seen = observe(s, {vp}, 256);
  CHECK(seen.observed_count() == seen.regions.size());
}

TEST_CASE("default viewpoints see the whole empty cabinet") {
  SceneState s = make_scene({{0.28, 0.7}, {0.06, 0.06}}, {});
  s.objects.clear();
  const VisibilityConfig cfg;
  const auto vps = default_viewpoints(s.spec, cfg);
  CHECK(vps.size() == 3);
  for (const auto& vp : vps) CHECK_NOTHROW(vp.validate());
  CHECK(observe(s, vps, cfg.ray_count).observed_count() == s.regions.size());
}

TEST_CASE("a wide object near the opening shadows the region behind it") {
  const SceneState s = make_scene({{0.28, 0.76}, {0.06, 0.06}}, {{{0.28, 0.15}, {0.30, 0.06}}});
  const auto vps = default_viewpoints(s.spec);
  const std::size_t behind = region_at(s, 0.28, 0.44);
  for (const auto& vp : vps) REQUIRE(sightline_blocked(vp, s.regions[behind].center2(), s));

  const SceneState seen = observe(s, vps, 256);
  CHECK_FALSE(seen.regions[behind].observed);
  // Regions beside the object in the front row stay visible.
  CHECK(seen.regions[region_at(s, 0.04, 0.04)].observed);
  CHECK(seen.regions[region_at(s, 0.52, 0.04)].observed);
}

TEST_CASE("observe is deterministic and idempotent") {
  const SceneState s = generate_scene(GenConfig{}, 21);
  const auto vps = default_viewpoints(s.spec);
  const SceneState once = observe(s, vps, 256);
  CHECK(observe(s, vps, 256) == once);
  CHECK(observe(once, vps, 256) == once);
  CHECK_THROWS_AS(observe(s, vps, 0), std::invalid_argument);
}

TEST_CASE("reobserving after the occluder moves reveals its shadow") {
  SceneState s = make_scene({{0.28, 0.76}, {0.06, 0.06}}, {{{0.28, 0.15}, {0.30, 0.06}}});
  const auto vps = default_viewpoints(s.spec);
  const SceneState before = observe(s, vps, 256);
  const std::size_t behind = region_at(s, 0.28, 0.44);
  REQUIRE_FALSE(before.regions[behind].observed);

  CHECK(reobserve_after_move(before, vps, 256) == before);

  SceneState moved = before;
  moved.objects[1].center.head<2>() = Vec2{0.28, 0.83};
  moved.objects[1].dims.y() = 0.02;
  moved.validate();
  const SceneState after = reobserve_after_move(moved, vps, 256);
  CHECK(after.regions[behind].observed);
  // Persistent map: nothing observed before is lost.
  for (std::size_t i = 0; i < before.regions.size(); ++i) {
    if (before.regions[i].observed) CHECK(after.regions[i].observed);
  }
}

TEST_CASE("observed set is monotone over random moves") {
  SceneState s = generate_scene(GenConfig{}, 4);
  const auto vps = default_viewpoints(s.spec);
  s = observe(s, vps, 256);
  Rng rng(8);
  for (int step = 0; step < 20; ++step) {
    SceneState next = s;
    auto& o = next.objects[1 + rng.index(next.objects.size() - 1)];
    const Vec2 at{rng.uniform(0.05, 0.51), rng.uniform(0.05, 0.81)};
    if (!placement_free(next, o, at)) continue;
    o.center.head<2>() = at;
    next = reobserve_after_move(next, vps, 256);
    for (std::size_t i = 0; i < s.regions.size(); ++i) {
      if (s.regions[i].observed) CHECK(next.regions[i].observed);
    }
    s = next;
  }
}
