// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "retrieve/motion.hpp"
#include "retrieve/neural/networks.hpp"
#include "retrieve/neural/train.hpp"
#include "retrieve/oracle.hpp"
#include "retrieve/planners.hpp"
#include "retrieve/scene.hpp"
#include "retrieve/visibility.hpp"

namespace retrieve {

struct DatasetSection {
  int scenes = 3000;            // training corpus size
  std::uint64_t seed = 100000;  // scene seeds are seed, seed + 1, ...
  int heldout_scenes = 600;     // separate corpus for evaluation
  std::uint64_t heldout_seed = 900000;
};

struct TrainingSection {
  nn::NetSpec osnet{nn::NetKind::osnet};
  nn::NetSpec rpnet{nn::NetKind::rpnet};
  nn::TrainConfig osnet_train;
  nn::TrainConfig rpnet_train;
  int rpnet_max_samples = 0;  // 0 uses the whole dataset
};

struct BenchSection {
  int corpus_size = 100;
  std::uint64_t corpus_seed = 0;
  Scalar max_reachable_fraction = 0.3;
  std::uint64_t seed = 0;  // episode seeds derive from this and the scene index
  int step_limit = 5;
  int region_attempts = 10;
  Scalar region_cost_ceiling = 1.0;
  std::vector<PlannerKind> planners{std::begin(kAllPlanners), std::end(kAllPlanners)};
};

/// Every tunable of the pipeline in one document.
struct RunConfig {
  GenConfig scene;
  VisibilityConfig visibility;
  MotionConfig motion;
  OracleConfig oracle;
  DatasetSection dataset;
  TrainingSection training;
  BenchSection bench;

  DatasetConfig dataset_config(std::uint64_t seed) const;
  PlannerConfig planner_config() const;
  void validate() const;
};

/// Library defaults.
RunConfig default_config();

/// Benchmark profile: defaults with denser scenes (8 to 14 non-target objects,
/// sides from 0.06 m), a larger training corpus, shorter training schedules
/// and an RPNet cost ceiling picked on a separate validation corpus.
RunConfig standard_config();

std::string config_to_string(const RunConfig& c);
/// Missing keys keep the value from `base`; unknown keys raise ParseError.
RunConfig config_from_string(const std::string& text, const RunConfig& base = default_config());
RunConfig load_config(const std::string& path, const RunConfig& base = default_config());
void save_config(const std::string& path, const RunConfig& c);

}  // namespace retrieve
