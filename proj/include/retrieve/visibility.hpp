// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "retrieve/scene.hpp"

namespace retrieve {

/// Camera pose at (or in front of) the cabinet opening. `heading` is the
/// optical-axis angle in the ground plane, measured from +x.
struct Viewpoint {
  Vec3 position = Vec3::Zero();
  Scalar heading = 1.5707963267948966;
  Scalar fov_half_angle = 1.0471975511965976;

  void validate() const;
};

struct VisibilityConfig {
  int viewpoint_count = 3;
  Scalar fov_half_angle = 1.0471975511965976;  // pi / 3
  // Outer viewpoints turned by this much; negative turns them inward so each
  // looks across the opening. -pi / 6 sees every cell of the empty cabinet.
  Scalar fan_half_angle = -0.5235987755982988;
  Scalar edge_inset = 0.01;
  int ray_count = 256;
};

/// Viewpoints spread evenly across the opening in the y = 0 plane. Headings
/// step linearly from pi / 2 + fan (leftmost) to pi / 2 - fan (rightmost).
std::vector<Viewpoint> default_viewpoints(const SceneSpec& spec, const VisibilityConfig& cfg = {});

/// Marks regions observed from the viewpoints. Each viewpoint casts
/// `ray_count` rays evenly over its field of view; a region centre is observed
/// when the ray closest to its bearing travels at least as far as the centre
/// before meeting an object footprint edge or a cabinet wall. Flags are ORed
/// with the incoming ones, so observed regions stay observed.
SceneState observe(const SceneState& s, const std::vector<Viewpoint>& viewpoints, int ray_count);

/// Recomputes visibility on the current object poses and ORs with the
/// previous flags.
SceneState reobserve_after_move(const SceneState& s, const std::vector<Viewpoint>& viewpoints, int ray_count);

}  // namespace retrieve
