// SPDX-License-Identifier: Apache-2.0
#include "retrieve/visibility.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace retrieve {

namespace {

struct Segment {
  Vec2 a, b;
};

std::vector<Segment> occluders(const SceneState& s) {
  std::vector<Segment> segs;
  for (const auto& w : cabinet_walls(s.spec)) segs.push_back({{w.x_min, w.y_min}, {w.x_max, w.y_max}});
  for (const auto& o : s.objects) {
    const auto c = footprint(o).corners();
    for (int i = 0; i < 4; ++i) segs.push_back({c[i], c[(i + 1) % 4]});
  }
  return segs;
}

Scalar wrap_angle(Scalar a) {
  a = std::fmod(a + std::numbers::pi, 2 * std::numbers::pi);
  if (a < 0) a += 2 * std::numbers::pi;
  return a - std::numbers::pi;
}

}  // namespace

void Viewpoint::validate() const {
  if (!position.allFinite() || position.y() > 0) throw std::invalid_argument("viewpoint must sit at or outside the opening");
  if (!(fov_half_angle > 0 && fov_half_angle <= std::numbers::pi / 2)) {
    throw std::invalid_argument("fov half angle must be in (0, pi/2]");
  }
}

std::vector<Viewpoint> default_viewpoints(const SceneSpec& spec, const VisibilityConfig& cfg) {
  std::vector<Viewpoint> vps;
  const int n = std::max(1, cfg.viewpoint_count);
  const Scalar lo = spec.opening_min + cfg.edge_inset;
  const Scalar hi = spec.opening_max - cfg.edge_inset;
  for (int i = 0; i < n; ++i) {
    const Scalar u = n == 1 ? 0.5 : static_cast<Scalar>(i) / (n - 1);
    Viewpoint vp;
    vp.position = Vec3{lo + u * (hi - lo), 0.0, 0.0};
    vp.heading = std::numbers::pi / 2 + cfg.fan_half_angle * (1 - 2 * u);
    vp.fov_half_angle = cfg.fov_half_angle;
    vps.push_back(vp);
  }
  return vps;
}

SceneState observe(const SceneState& s, const std::vector<Viewpoint>& viewpoints, int ray_count) {
  if (ray_count < 1) throw std::invalid_argument("ray_count must be >= 1");
  const auto segs = occluders(s);
  const Scalar reach = 4 * s.spec.floor_diagonal();
  SceneState out = s;

  for (const auto& vp : viewpoints) {
    vp.validate();
    const Vec2 origin = vp.position.head<2>();
    const Scalar span = 2 * vp.fov_half_angle / ray_count;

    std::vector<Scalar> free_length(static_cast<std::size_t>(ray_count));
    for (int k = 0; k < ray_count; ++k) {
      const Scalar a = vp.heading - vp.fov_half_angle + (k + 0.5) * span;
      const Vec2 end = origin + reach * Vec2{std::cos(a), std::sin(a)};
      Scalar t_min = 1;
      for (const auto& sg : segs) {
        if (auto t = segment_intersection(origin, end, sg.a, sg.b); t && *t < t_min) t_min = *t;
      }
      free_length[static_cast<std::size_t>(k)] = t_min * reach;
    }

    for (auto& r : out.regions) {
      if (r.observed) continue;
      const Vec2 d = r.center2() - origin;
      const Scalar rel = wrap_angle(std::atan2(d.y(), d.x()) - vp.heading);
      if (std::abs(rel) > vp.fov_half_angle) continue;
      const auto k = std::clamp(static_cast<int>(std::floor((rel + vp.fov_half_angle) / span)), 0, ray_count - 1);
      if (free_length[static_cast<std::size_t>(k)] >= d.norm()) r.observed = true;
    }
  }
  return out;
}

SceneState reobserve_after_move(const SceneState& s, const std::vector<Viewpoint>& viewpoints, int ray_count) {
  SceneState fresh = s;
  for (auto& r : fresh.regions) r.observed = false;
  fresh = observe(fresh, viewpoints, ray_count);
  for (std::size_t i = 0; i < fresh.regions.size(); ++i) {
    fresh.regions[i].observed = fresh.regions[i].observed || s.regions[i].observed;
  }
  return fresh;
}

}  // namespace retrieve
