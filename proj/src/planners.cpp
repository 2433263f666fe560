// SPDX-License-Identifier: Apache-2.0
#include "retrieve/planners.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <numeric>

#include "retrieve/rng.hpp"

namespace retrieve {

std::string to_string(PlannerKind k) {
  switch (k) {
    case PlannerKind::neural: return "neural";
    case PlannerKind::random: return "random";
    case PlannerKind::local: return "local";
    case PlannerKind::osnet_only: return "osnet_only";
    case PlannerKind::rpnet_only: return "rpnet_only";
  }
  return "unknown";
}

PlannerKind planner_from_string(const std::string& s) {
  for (auto k : kAllPlanners) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown planner '" + s + "'");
}

bool needs_models(PlannerKind k) { return k != PlannerKind::random && k != PlannerKind::local; }

SceneState execute_action(const SceneState& s, const RearrangeAction& a, const std::vector<Viewpoint>& viewpoints,
                          int ray_count) {
  const ObjectState* o = s.find(a.object);
  if (o == nullptr || o->is_target) throw ExecutionError("action moves a missing or target object");
  const Vec2 at = a.destination.head<2>();
  if (!placement_free(s, *o, at)) throw ExecutionError("placing object " + std::to_string(a.object) + " overlaps");
  SceneState next = s;
  next.find(a.object)->center.head<2>() = at;
  try {
    next.validate();
  } catch (const std::invalid_argument& e) {
    throw ExecutionError(std::string("scene invalid after move: ") + e.what());
  }
  return reobserve_after_move(next, viewpoints, ray_count);
}

std::optional<Config> pre_grasp_config(const SceneState& s, const ObjectState& o, const MotionConfig& cfg) {
  const ObstacleSet obs = make_obstacles(s, {}, RobotShape::disc(s.gripper_radius), cfg);
  const Config entry = entry_config(s.spec, cfg);
  const Vec2 c = o.center2();
  const Scalar span = (entry - c).norm();
  if (span == 0) return std::nullopt;
  const Vec2 u = (entry - c) / span;
  for (Scalar t = 0; t <= span; t += cfg.resolution) {
    const Config q = c + t * u;
    if (!collide(q, obs)) return q;
  }
  return std::nullopt;
}

std::pair<Config, Config> straight_segment(const SceneState& s, const MotionConfig& cfg) {
  return {entry_config(s.spec, cfg), grasp_config(s.grasp)};
}

std::vector<ObjectId> straight_line_blockers(const SceneState& s, const MotionConfig& cfg) {
  const auto [a, b] = straight_segment(s, cfg);
  std::vector<std::pair<Scalar, ObjectId>> hits;
  for (ObjectId id : s.non_target_ids()) {
    const Rect2 fp = footprint(*s.find(id));
    if (segment_rect_distance(a, b, fp) <= s.gripper_radius) hits.emplace_back(distance(a, fp), id);
  }
  std::stable_sort(hits.begin(), hits.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<ObjectId> ids;
  for (const auto& h : hits) ids.push_back(h.second);
  return ids;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::optional<Path> pick_path(const SceneState& s, const ObjectState& o, const PlannerConfig& cfg, std::uint64_t seed) {
  const auto q = pre_grasp_config(s, o, cfg.motion);
  if (!q) return std::nullopt;
  const ObstacleSet obs = make_obstacles(s, {o.id}, RobotShape::disc(s.gripper_radius), cfg.motion);
  const Config entry = entry_config(s.spec, cfg.motion);
  if (collide(*q, obs) || collide(entry, obs) || *q == entry) return std::nullopt;
  auto p = rrt_connect(entry, *q, obs, cfg.motion.budget, seed, cfg.motion.step_size, cfg.motion.resolution);
  if (!p) return std::nullopt;
  return smooth(*p, obs, cfg.motion.smooth_iterations, seed, cfg.motion.resolution);
}

ObstacleSet transport_obstacles(const SceneState& s, const ObjectState& o, const PlannerConfig& cfg) {
  return make_obstacles(s, {o.id}, RobotShape::box(0.5 * o.dims.x(), 0.5 * o.dims.y()), cfg.motion);
}

/// Destination check shared by every placement rule: a distinct spot where the
/// carried footprint is collision-free.
bool destination_fits(const SceneState& s, const ObstacleSet& obs, const ObjectState& o, const Vec2& at) {
  return at != o.center2() && placement_free(s, o, at) && !collide(at, obs);
}

std::optional<Path> place_path(const SceneState& s, const ObstacleSet& obs, const ObjectState& o, const Vec2& at, const PlannerConfig& cfg,
                               std::uint64_t seed) {
  if (collide(o.center2(), obs) || !destination_fits(s, obs, o, at)) return std::nullopt;
  auto p = rrt_connect(o.center2(), at, obs, cfg.motion.budget, seed, cfg.motion.step_size, cfg.motion.resolution);
  if (!p) return std::nullopt;
  return smooth(*p, obs, cfg.motion.smooth_iterations, seed, cfg.motion.resolution);
}

bool region_valid(const SceneState& s, ObjectId sel, std::size_t i) {
  return s.regions[i].observed && !region_occupied(s.regions[i], s, sel);
}

struct Placement {
  std::size_t region = 0;
  Path place;
};

/// Object ranking for one step; time spent here counts as decision time.
using RankFn = std::function<std::vector<ObjectId>(const SceneState&)>;
/// Placement for one object; implementations add their own decision time.
using PlaceFn =
    std::function<std::optional<Placement>(const SceneState&, const ObjectState&, int step, std::uint64_t, double&)>;

PlanResult run_episode(const SceneState& scene, const PlannerConfig& cfg, std::uint64_t seed, const RankFn& rank,
                       const PlaceFn& place) {
  if (cfg.step_limit < 0) throw std::invalid_argument("step limit must be >= 0");
  const auto viewpoints = default_viewpoints(scene.spec, cfg.visibility);
  SceneState s = observe(scene, viewpoints, cfg.visibility.ray_count);
  PlanResult res;
  for (int step = 0;; ++step) {
    const auto st = static_cast<std::uint64_t>(step);
    if (auto p = reachable(s, {}, cfg.motion.budget, derive_seed(seed, {st, 1}), cfg.motion)) {
      const ObstacleSet obs = make_obstacles(s, {s.target().id}, RobotShape::disc(s.gripper_radius), cfg.motion);
      res.retrieval = smooth(*p, obs, cfg.motion.smooth_iterations, derive_seed(seed, {st, 2}), cfg.motion.resolution);
      res.workspace_distance += path_length(*res.retrieval);
      res.success = true;
      return res;
    }
    if (step >= cfg.step_limit) {
      res.failure_reason = "step limit";
      return res;
    }
    const auto t0 = Clock::now();
    const std::vector<ObjectId> ranking = rank(s);
    res.decision_time += seconds_since(t0);

    std::optional<RearrangeAction> action;
    for (ObjectId id : ranking) {
      const ObjectState& o = *s.find(id);
      const auto oid = static_cast<std::uint64_t>(id);
      auto pick = pick_path(s, o, cfg, derive_seed(seed, {st, 3, oid}));
      if (!pick) continue;
      auto placement = place(s, o, step, derive_seed(seed, {st, 4, oid}), res.decision_time);
      if (!placement) continue;
      RearrangeAction a;
      a.object = id;
      a.source = o.center;
      a.region = placement->region;
      a.destination = s.regions[placement->region].center;
      a.destination.z() = o.center.z();
      a.pick = std::move(*pick);
      a.place = std::move(placement->place);
      a.region_observed = s.regions[a.region].observed;
      a.region_occupied = region_occupied(s.regions[a.region], s, id);
      action = std::move(a);
      break;
    }
    if (!action) {
      res.failure_reason = "stuck";
      return res;
    }
    s = execute_action(s, *action, viewpoints, cfg.visibility.ray_count);
    res.workspace_distance += path_length(action->pick) + path_length(action->place);
    res.actions.push_back(std::move(*action));
  }
}

/// Tries regions in the given order, at most cfg.region_attempts place plans.
std::optional<Placement> first_feasible(const SceneState& s, const ObjectState& o, const std::vector<std::size_t>& order,
                                        const PlannerConfig& cfg, std::uint64_t seed) {
  const ObstacleSet obs = transport_obstacles(s, o, cfg);
  int attempts = 0;
  for (auto i : order) {
    if (attempts >= cfg.region_attempts) break;
    const Vec2 at = s.regions[i].center2();
    if (!destination_fits(s, obs, o, at)) continue;
    ++attempts;
    if (auto p = place_path(s, obs, o, at, cfg, derive_seed(seed, {static_cast<std::uint64_t>(i)}))) {
      return Placement{i, std::move(*p)};
    }
  }
  return std::nullopt;
}

/// Analytical placement: plan a transport to every valid region whose
/// occupancy stays clear of the straight entry-to-grasp segment and keep the
/// shortest transport (ties to the lower index). All of it is decision time.
std::optional<Placement> analytic_placement(const SceneState& s, const ObjectState& o, const PlannerConfig& cfg,
                                            std::uint64_t seed, double& decision_time) {
  const auto t0 = Clock::now();
  const auto [a, b] = straight_segment(s, cfg.motion);
  const ObstacleSet obs = transport_obstacles(s, o, cfg);
  std::optional<Placement> best;
  Scalar best_len = 0;
  for (std::size_t i = 0; i < s.regions.size(); ++i) {
    const Vec2 at = s.regions[i].center2();
    if (!region_valid(s, o.id, i) || !destination_fits(s, obs, o, at)) continue;
    if (segment_rect_distance(a, b, footprint_at(o, at)) <= s.gripper_radius) continue;
    auto p = place_path(s, obs, o, at, cfg, derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    if (!p) continue;
    const Scalar len = path_length(*p);
    if (!best || len < best_len) {
      best_len = len;
      best = Placement{i, std::move(*p)};
    }
  }
  decision_time += seconds_since(t0);
  return best;
}

/// Scene encoding shared by every candidate object within one step.
struct RpnetCache {
  int step = -1;
  nn::RpnetMemory memory;
};

/// RPNet placement: costs for the selected object, invalid regions masked,
/// ascending order (ties to the lower index). Regions predicted at or above
/// the cost ceiling are treated like the oracle's maximum class and dropped,
/// so an object with no useful spot falls through to the next one. Only the
/// network query and the sort count as decision time.
std::optional<Placement> rpnet_placement(const SceneState& s, const ObjectState& o, int step, const nn::Network& rpnet,
                                         RpnetCache& cache, const PlannerConfig& cfg, std::uint64_t seed,
                                         double& decision_time) {
  const auto t0 = Clock::now();
  const nn::TokenFeatures x = nn::encode_inputs(s, o.id);
  if (cache.step != step) cache = {step, nn::rpnet_encode(rpnet, x)};
  const RegionCosts costs = nn::rpnet_decode(rpnet, cache.memory, x.selected);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < s.regions.size(); ++i) {
    if (region_valid(s, o.id, i) && costs.costs[i] < cfg.region_cost_ceiling) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return costs.costs[x] < costs.costs[y]; });
  decision_time += seconds_since(t0);
  return first_feasible(s, o, order, cfg, seed);
}

std::vector<ObjectId> osnet_ranking(const SceneState& s, const nn::Network& osnet) {
  const auto out = nn::osnet_forward(osnet, nn::encode_inputs(s));
  std::vector<std::size_t> idx(out.ids.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto x, auto y) { return out.raw[x] > out.raw[y]; });
  std::vector<ObjectId> ids;
  for (auto i : idx) ids.push_back(out.ids[i]);
  return ids;
}

void require(const nn::Network* net, nn::NetKind kind, PlannerKind planner) {
  if (net == nullptr) throw std::invalid_argument(to_string(planner) + " planner needs a trained " + nn::to_string(kind));
  if (net->spec.kind != kind) throw std::invalid_argument("model passed as " + nn::to_string(kind) + " has the wrong kind");
}

}  // namespace

PlanResult plan_neural(const SceneState& s, const Models& models, const PlannerConfig& cfg, std::uint64_t seed) {
  require(models.osnet, nn::NetKind::osnet, PlannerKind::neural);
  require(models.rpnet, nn::NetKind::rpnet, PlannerKind::neural);
  return run_episode(
      s, cfg, seed, [&](const SceneState& x) { return osnet_ranking(x, *models.osnet); },
      [&, cache = RpnetCache{}](const SceneState& x, const ObjectState& o, int step, std::uint64_t sd,
                                double& dt) mutable { return rpnet_placement(x, o, step, *models.rpnet, cache, cfg, sd, dt); });
}

PlanResult plan_random(const SceneState& s, const PlannerConfig& cfg, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0xa11}));
  return run_episode(
      s, cfg, seed,
      [&](const SceneState& x) {
        auto ids = x.non_target_ids();
        rng.shuffle(ids);
        return ids;
      },
      [&](const SceneState& x, const ObjectState& o, int, std::uint64_t sd, double& dt) {
        const auto t0 = Clock::now();
        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < x.regions.size(); ++i) {
          if (region_valid(x, o.id, i)) order.push_back(i);
        }
        rng.shuffle(order);
        dt += seconds_since(t0);
        return first_feasible(x, o, order, cfg, sd);
      });
}

PlanResult plan_local(const SceneState& s, const PlannerConfig& cfg, std::uint64_t seed) {
  return run_episode(
      s, cfg, seed, [&](const SceneState& x) { return straight_line_blockers(x, cfg.motion); },
      [&](const SceneState& x, const ObjectState& o, int, std::uint64_t sd, double& dt) {
        return analytic_placement(x, o, cfg, sd, dt);
      });
}

PlanResult plan_osnet_only(const SceneState& s, const Models& models, const PlannerConfig& cfg, std::uint64_t seed) {
  require(models.osnet, nn::NetKind::osnet, PlannerKind::osnet_only);
  return run_episode(
      s, cfg, seed, [&](const SceneState& x) { return osnet_ranking(x, *models.osnet); },
      [&](const SceneState& x, const ObjectState& o, int, std::uint64_t sd, double& dt) {
        return analytic_placement(x, o, cfg, sd, dt);
      });
}

PlanResult plan_rpnet_only(const SceneState& s, const Models& models, const PlannerConfig& cfg, std::uint64_t seed) {
  require(models.rpnet, nn::NetKind::rpnet, PlannerKind::rpnet_only);
  return run_episode(
      s, cfg, seed, [&](const SceneState& x) { return straight_line_blockers(x, cfg.motion); },
      [&, cache = RpnetCache{}](const SceneState& x, const ObjectState& o, int step, std::uint64_t sd,
                                double& dt) mutable { return rpnet_placement(x, o, step, *models.rpnet, cache, cfg, sd, dt); });
}

PlanResult plan(PlannerKind kind, const SceneState& s, const Models& models, const PlannerConfig& cfg,
                std::uint64_t seed) {
  switch (kind) {
    case PlannerKind::neural: return plan_neural(s, models, cfg, seed);
    case PlannerKind::random: return plan_random(s, cfg, seed);
    case PlannerKind::local: return plan_local(s, cfg, seed);
    case PlannerKind::osnet_only: return plan_osnet_only(s, models, cfg, seed);
    case PlannerKind::rpnet_only: return plan_rpnet_only(s, models, cfg, seed);
  }
  throw std::invalid_argument("unknown planner kind");
}

}  // namespace retrieve
