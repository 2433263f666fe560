// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "retrieve/motion.hpp"
#include "retrieve/scene.hpp"
#include "retrieve/visibility.hpp"

namespace retrieve {

/// Probability per non-target object id, ascending id order.
struct BlockingDistribution {
  std::vector<std::pair<ObjectId, Scalar>> probs;

  Scalar probability(ObjectId id) const;
  /// Highest-probability id, ties to the lowest id.
  ObjectId argmax() const;
  /// Ids sharing the maximal probability.
  std::vector<ObjectId> argmax_set() const;
};

/// One cost in [0, 1] per region, in region-list order.
struct RegionCosts {
  std::vector<Scalar> costs;

  /// Lowest-cost index, ties to the lowest index.
  std::size_t argmin() const;
};

struct EpisodeSample {
  SceneState scene;
  BlockingDistribution osnet_label;
  ObjectId selected = 0;
  RegionCosts rpnet_label;
};

struct OracleConfig {
  int homotopy_paths = 20;  // K
  int step_limit = 5;
  Scalar distance_cost_cap = 0.999;
};

/// K smoothed paths from the entry config to the grasp config in a world of
/// walls alone. Path k uses seeds[k] for both planning and smoothing.
/// Throws std::runtime_error if any plan fails.
std::vector<Path> homotopy_paths(const SceneState& s, int K, const std::vector<std::uint64_t>& seeds,
                                 const MotionConfig& mcfg = {});

/// K seeds derived from one base seed.
std::vector<std::uint64_t> homotopy_seeds(std::uint64_t base, int K);

/// True when the gripper disc swept along `p` touches `rect`.
bool path_blocked_by(const Path& p, const Rect2& rect, Scalar gripper_radius);

/// Raw per-object blocking counts (ascending id).
std::vector<std::pair<ObjectId, int>> blocking_count_table(const SceneState& s, const std::vector<Path>& paths);

/// Normalized blocking counts; nullopt when no path is blocked by anything.
std::optional<BlockingDistribution> blocking_counts(const SceneState& s, const std::vector<Path>& paths);

/// Ground-truth placement costs for moving `o_sel`. A region costs 1 when it is
/// occupied, unobserved, blocks a path, or cannot hold the object's footprint.
RegionCosts region_costs(const SceneState& s, ObjectId o_sel, const std::vector<Path>& paths,
                         const OracleConfig& cfg = {});

struct DatasetConfig {
  OracleConfig oracle;
  MotionConfig motion;
  VisibilityConfig visibility;
  std::uint64_t seed = 0;
};

struct DatasetStats {
  int scenes = 0;
  int samples = 0;
  int skipped_no_blockers = 0;
  int skipped_no_free_region = 0;
  int initially_reachable = 0;
};

/// Oracle rollout over a corpus: per scene, alternate reachability checks and
/// oracle actions, emitting one sample per action.
std::vector<EpisodeSample> generate_dataset(const std::vector<SceneState>& corpus, const DatasetConfig& cfg,
                                            DatasetStats* stats = nullptr);

/// Rollout of a single scene (scene index feeds the seed derivation).
std::vector<EpisodeSample> rollout_scene(const SceneState& scene, std::size_t index, const DatasetConfig& cfg,
                                         DatasetStats* stats = nullptr);

std::string serialize_sample(const EpisodeSample& s);
EpisodeSample deserialize_sample(std::string_view record, std::size_t line = 0);

struct DatasetMeta {
  int homotopy_paths = 20;
  int step_limit = 5;
  std::uint64_t seed = 0;
  std::string generator_version;
  std::size_t sample_count = 0;
};

void write_dataset(const std::string& path, const std::vector<EpisodeSample>& samples, const DatasetMeta& meta);
std::vector<EpisodeSample> read_dataset(const std::string& path);

}  // namespace retrieve
