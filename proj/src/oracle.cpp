// SPDX-License-Identifier: Apache-2.0
#include "retrieve/oracle.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "retrieve/json_io.hpp"
#include "retrieve/rng.hpp"
#include "retrieve/version.hpp"

namespace retrieve {

using nlohmann::json;

Scalar BlockingDistribution::probability(ObjectId id) const {
  for (const auto& [i, p] : probs) {
    if (i == id) return p;
  }
  throw std::out_of_range("object " + std::to_string(id) + " not in distribution");
}

ObjectId BlockingDistribution::argmax() const {
  if (probs.empty()) throw std::logic_error("empty distribution");
  auto best = probs.front();
  for (const auto& e : probs) {
    if (e.second > best.second || (e.second == best.second && e.first < best.first)) best = e;
  }
  return best.first;
}

std::vector<ObjectId> BlockingDistribution::argmax_set() const {
  const Scalar top = probability(argmax());
  std::vector<ObjectId> ids;
  for (const auto& [i, p] : probs) {
    if (p == top) ids.push_back(i);
  }
  return ids;
}

std::size_t RegionCosts::argmin() const {
  if (costs.empty()) throw std::logic_error("empty cost map");
  return static_cast<std::size_t>(std::min_element(costs.begin(), costs.end()) - costs.begin());
}

std::vector<std::uint64_t> homotopy_seeds(std::uint64_t base, int K) {
  std::vector<std::uint64_t> seeds;
  for (int k = 0; k < K; ++k) seeds.push_back(derive_seed(base, {static_cast<std::uint64_t>(k)}));
  return seeds;
}

std::vector<Path> homotopy_paths(const SceneState& s, int K, const std::vector<std::uint64_t>& seeds,
                                 const MotionConfig& mcfg) {
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  if (seeds.size() < static_cast<std::size_t>(K)) throw std::invalid_argument("need one seed per homotopy path");
  const ObstacleSet walls = walls_only(s, RobotShape::disc(s.gripper_radius), mcfg);
  const Config start = entry_config(s.spec, mcfg);
  const Config goal = grasp_config(s.grasp);
  std::vector<Path> paths;
  paths.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    const auto seed = seeds[static_cast<std::size_t>(k)];
    auto p = rrt_connect(start, goal, walls, mcfg.budget, seed, mcfg.step_size, mcfg.resolution);
    if (!p) throw std::runtime_error("homotopy path planning failed in the walls-only world");
    paths.push_back(smooth(*p, walls, mcfg.smooth_iterations, seed, mcfg.resolution));
  }
  return paths;
}

bool path_blocked_by(const Path& p, const Rect2& rect, Scalar gripper_radius) {
  for (std::size_t i = 0; i + 1 < p.waypoints.size(); ++i) {
    if (segment_rect_distance(p.waypoints[i], p.waypoints[i + 1], rect) <= gripper_radius) return true;
  }
  return false;
}

std::vector<std::pair<ObjectId, int>> blocking_count_table(const SceneState& s, const std::vector<Path>& paths) {
  std::vector<std::pair<ObjectId, int>> table;
  for (ObjectId id : s.non_target_ids()) {
    const Rect2 fp = footprint(*s.find(id));
    int count = 0;
    for (const auto& p : paths) count += path_blocked_by(p, fp, s.gripper_radius) ? 1 : 0;
    table.emplace_back(id, count);
  }
  return table;
}

std::optional<BlockingDistribution> blocking_counts(const SceneState& s, const std::vector<Path>& paths) {
  if (paths.empty()) throw std::invalid_argument("blocking_counts needs at least one path");
  const auto table = blocking_count_table(s, paths);
  const int total = std::accumulate(table.begin(), table.end(), 0, [](int acc, const auto& e) { return acc + e.second; });
  if (total == 0) return std::nullopt;
  BlockingDistribution d;
  for (const auto& [id, c] : table) d.probs.emplace_back(id, static_cast<Scalar>(c) / total);
  return d;
}

RegionCosts region_costs(const SceneState& s, ObjectId o_sel, const std::vector<Path>& paths, const OracleConfig& cfg) {
  const ObjectState* sel = s.find(o_sel);
  if (sel == nullptr || sel->is_target) throw std::invalid_argument("selected object must be a non-target object in the scene");
  const Scalar diag = s.spec.floor_diagonal();
  RegionCosts out;
  out.costs.reserve(s.regions.size());
  for (const auto& r : s.regions) {
    const bool occupied = region_occupied(r, s, o_sel);
    const bool blocking = std::any_of(paths.begin(), paths.end(), [&](const Path& p) {
      return path_blocked_by(p, footprint_at(*sel, r.center2()), s.gripper_radius);
    });
    const bool fits = placement_free(s, *sel, r.center2());
    if (occupied || !r.observed || blocking || !fits) {
      out.costs.push_back(1.0);
    } else if (region_cell(s.spec, r).contains(sel->center2())) {
      out.costs.push_back(0.0);
    } else {
      out.costs.push_back(std::min(cfg.distance_cost_cap, (r.center2() - sel->center2()).norm() / diag));
    }
  }
  return out;
}

std::vector<EpisodeSample> rollout_scene(const SceneState& scene, std::size_t index, const DatasetConfig& cfg,
                                         DatasetStats* stats) {
  DatasetStats local;
  DatasetStats& st = stats ? *stats : local;
  const auto viewpoints = default_viewpoints(scene.spec, cfg.visibility);
  SceneState s = observe(scene, viewpoints, cfg.visibility.ray_count);
  std::vector<EpisodeSample> out;
  ++st.scenes;
  for (int step = 0; step < cfg.oracle.step_limit; ++step) {
    const auto tag = static_cast<std::uint64_t>(index);
    const auto stp = static_cast<std::uint64_t>(step);
    if (reachable(s, {}, cfg.motion.budget, derive_seed(cfg.seed, {tag, stp, 1}), cfg.motion)) {
      if (step == 0) ++st.initially_reachable;
      break;
    }
    const auto paths = homotopy_paths(s, cfg.oracle.homotopy_paths,
                                      homotopy_seeds(derive_seed(cfg.seed, {tag, stp, 2}), cfg.oracle.homotopy_paths),
                                      cfg.motion);
    const auto dist = blocking_counts(s, paths);
    if (!dist) {
      ++st.skipped_no_blockers;
      break;
    }
    const ObjectId sel = dist->argmax();
    RegionCosts costs = region_costs(s, sel, paths, cfg.oracle);
    if (std::none_of(costs.costs.begin(), costs.costs.end(), [](Scalar c) { return c < 1.0; })) {
      ++st.skipped_no_free_region;
      break;
    }
    out.push_back({s, *dist, sel, costs});
    ++st.samples;

    // Oracle action: cheapest region where the object actually fits.
    std::vector<std::size_t> order(costs.costs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return costs.costs[a] < costs.costs[b]; });
    const ObjectState obj = *s.find(sel);
    bool moved = false;
    for (auto i : order) {
      if (costs.costs[i] >= 1.0) break;
      const Vec2 at = s.regions[i].center2();
      if (at == obj.center2() || !placement_free(s, obj, at)) continue;
      s.find(sel)->center.head<2>() = at;
      moved = true;
      break;
    }
    if (!moved) break;
    s = reobserve_after_move(s, viewpoints, cfg.visibility.ray_count);
  }
  return out;
}

std::vector<EpisodeSample> generate_dataset(const std::vector<SceneState>& corpus, const DatasetConfig& cfg,
                                            DatasetStats* stats) {
  if (cfg.oracle.step_limit < 1) throw std::invalid_argument("step_limit must be >= 1");
  std::vector<EpisodeSample> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto samples = rollout_scene(corpus[i], i, cfg, stats);
    out.insert(out.end(), std::make_move_iterator(samples.begin()), std::make_move_iterator(samples.end()));
  }
  return out;
}

std::string serialize_sample(const EpisodeSample& s) {
  json j;
  j["scene"] = scene_to_json(s.scene);
  json probs = json::array();
  for (const auto& [id, p] : s.osnet_label.probs) probs.push_back({{"id", id}, {"p", p}});
  j["osnet_label"] = std::move(probs);
  j["selected"] = s.selected;
  j["rpnet_label"] = s.rpnet_label.costs;
  return j.dump();
}

EpisodeSample deserialize_sample(std::string_view record, std::size_t line) {
  const std::string ctx = line > 0 ? "line " + std::to_string(line) : "record";
  const json j = parse_json(record, ctx);
  FieldReader rd(ctx);
  EpisodeSample s;
  s.scene = scene_from_json(rd.object(j, "scene"), ctx);
  const json& probs = rd.array(j, "osnet_label");
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const std::string p = "osnet_label[" + std::to_string(i) + "].";
    s.osnet_label.probs.emplace_back(rd.integer(probs[i], "id", p), rd.number(probs[i], "p", p));
  }
  s.selected = rd.integer(j, "selected");
  const json& costs = rd.array(j, "rpnet_label");
  for (const auto& c : costs) {
    if (!c.is_number()) rd.fail("rpnet_label", "expected numbers");
    s.rpnet_label.costs.push_back(c.get<double>());
  }
  if (s.rpnet_label.costs.size() != s.scene.regions.size()) rd.fail("rpnet_label", "length differs from region count");
  return s;
}

void write_dataset(const std::string& path, const std::vector<EpisodeSample>& samples, const DatasetMeta& meta) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset " + path);
  for (const auto& s : samples) out << serialize_sample(s) << '\n';
  std::ofstream side(path + ".meta.json");
  if (!side) throw std::runtime_error("cannot write dataset metadata for " + path);
  side << json{{"K", meta.homotopy_paths},
               {"step_limit", meta.step_limit},
               {"seed", meta.seed},
               {"generator_version", meta.generator_version.empty() ? std::string(kVersion) : meta.generator_version},
               {"samples", samples.size()}}
              .dump(2)
       << '\n';
}

std::vector<EpisodeSample> read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path);
  std::vector<EpisodeSample> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty()) out.push_back(deserialize_sample(line, n));
  }
  return out;
}

}  // namespace retrieve
