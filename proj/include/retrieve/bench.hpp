// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "retrieve/config.hpp"
#include "retrieve/neural/train.hpp"
#include "retrieve/planners.hpp"

namespace retrieve {

/// Scenes from consecutive seeds starting at bench.corpus_seed. A scene that
/// is reachable at t = 0 is skipped once the reachable quota
/// (max_reachable_fraction * corpus_size, rounded down) is filled.
/// `seeds` receives the generator seed of every kept scene.
std::vector<SceneState> standard_corpus(const RunConfig& cfg, std::vector<std::uint64_t>* seeds = nullptr);

/// Scenes from seeds seed .. seed + count - 1; seeds the generator rejects
/// are skipped, so the result may be shorter than `count`.
std::vector<SceneState> seeded_corpus(const GenConfig& cfg, std::uint64_t seed, int count);

/// Trains one network with the config's spec and schedule. RPNet uses the
/// first training.rpnet_max_samples samples when that is nonzero.
nn::TrainResult train_network(nn::NetKind kind, const std::vector<EpisodeSample>& samples, const RunConfig& cfg);

struct EpisodeRecord {
  std::size_t scene = 0;
  PlannerKind planner = PlannerKind::neural;
  std::uint64_t seed = 0;
  PlanResult result;
};

struct MetricsRow {
  PlannerKind planner = PlannerKind::neural;
  Scalar success_rate_pct = 0;
  // Statistics over successful episodes; NaN when there are none. The
  // spread is the sample standard deviation (0 for a single success).
  Scalar objects_rearranged_mean = 0;
  Scalar objects_rearranged_std = 0;
  Scalar planning_time_mean_s = 0;
  Scalar planning_time_std_s = 0;
  Scalar distance_mean_m = 0;
  Scalar distance_std_m = 0;
};

struct BenchResult {
  std::vector<MetricsRow> rows;
  std::vector<EpisodeRecord> episodes;  // scene-major, planners in request order
};

/// Seed of episode (scene, planner); every planner sees the same seed.
std::uint64_t episode_seed(std::uint64_t bench_seed, std::size_t scene);

/// Throws std::invalid_argument before any episode when a requested planner
/// lacks its model. `workers` > 1 fans scenes out over threads; results do
/// not depend on it apart from timings.
BenchResult run_benchmark(const std::vector<SceneState>& corpus, const std::vector<PlannerKind>& planners,
                          const Models& models, const RunConfig& cfg, int workers = 1);

std::vector<MetricsRow> aggregate(const std::vector<EpisodeRecord>& episodes, const std::vector<PlannerKind>& planners);

enum class ReportFormat { csv, table };

inline constexpr const char* kReportColumns[] = {
    "planner",          "success_rate_pct",    "objects_rearranged_mean", "objects_rearranged_std",
    "planning_time_mean_s", "planning_time_std_s", "distance_mean_m",         "distance_std_m"};

/// CSV uses 6 significant digits.
std::string format_report(const std::vector<MetricsRow>& rows, ReportFormat format);
std::vector<MetricsRow> parse_report_csv(const std::string& text);

/// One JSON object per episode.
std::string episodes_to_jsonl(const std::vector<EpisodeRecord>& episodes, bool include_timing = true);

/// 64-bit FNV-1a, 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);
std::string file_hash(const std::string& path);

struct ModelRef {
  std::string path;
  std::string hash;
};

struct RunManifest {
  std::string corpus_path;
  std::string corpus_hash;
  std::string config;  // full config snapshot as JSON text
  std::uint64_t bench_seed = 0;
  std::vector<std::uint64_t> episode_seeds;
  std::vector<PlannerKind> planners;
  std::optional<ModelRef> osnet;
  std::optional<ModelRef> rpnet;
  std::string version;
};

std::string manifest_to_string(const RunManifest& m);
RunManifest manifest_from_string(const std::string& text);

/// Writes the report plus `path + ".manifest.json"`.
void emit_report(const std::string& path, const std::vector<MetricsRow>& rows, const RunManifest& manifest,
                 ReportFormat format);

struct LoadedRun {
  std::vector<SceneState> corpus;
  RunConfig config;
  std::optional<nn::Network> osnet;
  std::optional<nn::Network> rpnet;

  Models models() const { return {osnet ? &*osnet : nullptr, rpnet ? &*rpnet : nullptr}; }
};

/// Loads every input a manifest names and checks the recorded hashes; throws
/// std::runtime_error on any mismatch.
LoadedRun load_run(const RunManifest& m);

/// Manifest for a run over files on disk.
RunManifest make_manifest(const std::string& corpus_path, const RunConfig& cfg, const std::vector<PlannerKind>& planners,
                          std::size_t corpus_size, const std::optional<std::string>& osnet_path,
                          const std::optional<std::string>& rpnet_path);

/// Reruns a manifest and returns the fresh result.
BenchResult rerun(const RunManifest& m, int workers = 1);

}  // namespace retrieve
