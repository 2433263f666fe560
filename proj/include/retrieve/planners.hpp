// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "retrieve/motion.hpp"
#include "retrieve/neural/networks.hpp"
#include "retrieve/scene.hpp"
#include "retrieve/visibility.hpp"

namespace retrieve {

enum class PlannerKind { neural, random, local, osnet_only, rpnet_only };

inline constexpr PlannerKind kAllPlanners[] = {PlannerKind::neural, PlannerKind::random, PlannerKind::local,
                                               PlannerKind::osnet_only, PlannerKind::rpnet_only};

std::string to_string(PlannerKind k);
PlannerKind planner_from_string(const std::string& s);
bool needs_models(PlannerKind k);

struct RearrangeAction {
  ObjectId object = 0;
  Vec3 source = Vec3::Zero();
  std::size_t region = 0;
  Vec3 destination = Vec3::Zero();  // region centre, z kept at the object's rest height
  Path pick;   // gripper, entry to pre-grasp
  Path place;  // carried object centre, source to destination
  // Region state when it was chosen.
  bool region_observed = false;
  bool region_occupied = false;
};

struct PlanResult {
  bool success = false;
  std::vector<RearrangeAction> actions;
  double decision_time = 0;  // seconds
  Scalar workspace_distance = 0;
  std::optional<Path> retrieval;
  std::string failure_reason;  // "stuck" or "step limit" on failure

  int objects_rearranged() const { return static_cast<int>(actions.size()); }
};

struct PlannerConfig {
  int step_limit = 5;  // T
  int region_attempts = 10;  // place-path attempts per object for ranked region lists
  Scalar region_cost_ceiling = 1.0;  // RPNet regions predicted at or above this count as blocking
  MotionConfig motion;
  VisibilityConfig visibility;
};

struct Models {
  const nn::Network* osnet = nullptr;
  const nn::Network* rpnet = nullptr;
};

class ExecutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Moves the object to the action's destination and reobserves. Throws
/// ExecutionError when the object would overlap another or leave the cabinet.
SceneState execute_action(const SceneState& s, const RearrangeAction& a, const std::vector<Viewpoint>& viewpoints,
                          int ray_count);

/// Gripper configuration beside `o` on the side facing the entry: the first
/// free config marching from the object centre toward the entry.
std::optional<Config> pre_grasp_config(const SceneState& s, const ObjectState& o, const MotionConfig& cfg = {});

/// Straight segment from the entry config to the grasp config.
std::pair<Config, Config> straight_segment(const SceneState& s, const MotionConfig& cfg = {});

/// Non-target objects whose footprint lies within the gripper radius of the
/// straight segment, nearest to the entry first.
std::vector<ObjectId> straight_line_blockers(const SceneState& s, const MotionConfig& cfg = {});

/// Runs one episode. The scene is observed first (flags ORed). Throws
/// std::invalid_argument when a model the planner needs is missing.
PlanResult plan(PlannerKind kind, const SceneState& s, const Models& models, const PlannerConfig& cfg,
                std::uint64_t seed);

PlanResult plan_neural(const SceneState& s, const Models& models, const PlannerConfig& cfg, std::uint64_t seed);
PlanResult plan_random(const SceneState& s, const PlannerConfig& cfg, std::uint64_t seed);
PlanResult plan_local(const SceneState& s, const PlannerConfig& cfg, std::uint64_t seed);
PlanResult plan_osnet_only(const SceneState& s, const Models& models, const PlannerConfig& cfg, std::uint64_t seed);
PlanResult plan_rpnet_only(const SceneState& s, const Models& models, const PlannerConfig& cfg, std::uint64_t seed);

}  // namespace retrieve
