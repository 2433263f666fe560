// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <stdexcept>

#include "retrieve/neural/networks.hpp"

namespace retrieve::nn {

namespace {

Tensor object_row(const SceneSpec& sp, const ObjectState& o) {
  Tensor r(1, kObjectFeatures);
  r << o.center.x() / sp.dx, o.center.y() / sp.dy, o.center.z() / sp.dz, o.dims.x() / sp.dx, o.dims.y() / sp.dy,
      o.dims.z() / sp.dz;
  return r;
}

}  // namespace

TokenFeatures encode_inputs(const SceneState& s, std::optional<ObjectId> selected) {
  const SceneSpec& sp = s.spec;
  TokenFeatures x;
  x.robot = Tensor::Zero(1, kObjectFeatures);
  x.robot(0, 0) = s.robot_base.x() / sp.dx;
  x.robot(0, 1) = s.robot_base.y() / sp.dy;
  x.robot(0, 2) = s.robot_base.z() / sp.dz;

  x.gripper = Tensor::Zero(1, kObjectFeatures);
  x.gripper(0, 0) = s.grasp.position.x() / sp.dx;
  x.gripper(0, 1) = s.grasp.position.y() / sp.dy;
  x.gripper(0, 2) = s.grasp.position.z() / sp.dz;
  x.gripper(0, 3) = std::sin(s.grasp.yaw);
  x.gripper(0, 4) = std::cos(s.grasp.yaw);

  x.target = object_row(sp, s.target());
  x.other_ids = s.non_target_ids();
  x.others.resize(static_cast<Eigen::Index>(x.other_ids.size()), kObjectFeatures);
  for (std::size_t i = 0; i < x.other_ids.size(); ++i) {
    x.others.row(static_cast<Eigen::Index>(i)) = object_row(sp, *s.find(x.other_ids[i]));
  }

  x.regions.resize(static_cast<Eigen::Index>(s.regions.size()), kRegionFeatures);
  for (std::size_t i = 0; i < s.regions.size(); ++i) {
    const Region& r = s.regions[i];
    x.regions.row(static_cast<Eigen::Index>(i)) << r.center.x() / sp.dx, r.center.y() / sp.dy, r.center.z() / sp.dz,
        r.observed ? 1.0 : 0.0;
  }

  if (selected) {
    const ObjectState* o = s.find(*selected);
    if (o == nullptr || o->is_target) throw std::invalid_argument("selected object must be a non-target object");
    x.selected = object_row(sp, *o);
  }
  return x;
}

}  // namespace retrieve::nn
