// SPDX-License-Identifier: Apache-2.0
#include "retrieve/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "retrieve/json_io.hpp"

namespace retrieve {

using nlohmann::json;

DatasetConfig RunConfig::dataset_config(std::uint64_t seed) const { return {oracle, motion, visibility, seed}; }

PlannerConfig RunConfig::planner_config() const { return {bench.step_limit, bench.region_attempts, bench.region_cost_ceiling, motion, visibility}; }

void RunConfig::validate() const {
  scene.validate();
  motion.budget.validate();
  if (!(motion.step_size > 0) || !(motion.resolution > 0) || !(motion.apron_depth >= 0) || motion.smooth_iterations < 0) {
    throw std::invalid_argument("motion step, resolution and apron must be positive");
  }
  training.osnet.validate();
  training.rpnet.validate();
  training.osnet_train.validate();
  training.rpnet_train.validate();
  if (training.osnet.kind != nn::NetKind::osnet || training.rpnet.kind != nn::NetKind::rpnet) {
    throw std::invalid_argument("training network kinds are fixed");
  }
  if (oracle.homotopy_paths < 1 || oracle.step_limit < 1) throw std::invalid_argument("oracle counts must be >= 1");
  if (bench.corpus_size < 1 || bench.step_limit < 0 || bench.region_attempts < 1) {
    throw std::invalid_argument("bench sizes out of range");
  }
  if (!(bench.region_cost_ceiling > 0)) throw std::invalid_argument("region_cost_ceiling must be positive");
  if (!(bench.max_reachable_fraction >= 0 && bench.max_reachable_fraction <= 1)) {
    throw std::invalid_argument("max_reachable_fraction must lie in [0, 1]");
  }
  if (visibility.ray_count < 1 || visibility.viewpoint_count < 1) throw std::invalid_argument("visibility counts must be >= 1");
}

RunConfig default_config() { return RunConfig{}; }

RunConfig standard_config() {
  RunConfig c;
  c.scene.m_min = 8;
  c.scene.m_max = 14;
  c.scene.side_min = 0.06;
  c.dataset.scenes = 4000;
  c.training.osnet_train.epochs = 30;
  c.training.rpnet_train.epochs = 20;
  c.training.rpnet_train.batch_size = 8;
  c.bench.region_cost_ceiling = 0.97;
  return c;
}

namespace {

/// Walks every config field once; the same table drives writing and reading.
template <typename Visitor>
void visit(RunConfig& c, Visitor& v) {
  v.section({"scene"});
  v("dx", c.scene.spec.dx);
  v("dy", c.scene.spec.dy);
  v("dz", c.scene.spec.dz);
  v("cell", c.scene.spec.cell);
  v("opening_min", c.scene.spec.opening_min);
  v("opening_max", c.scene.spec.opening_max);
  v("m_min", c.scene.m_min);
  v("m_max", c.scene.m_max);
  v("side_min", c.scene.side_min);
  v("side_max", c.scene.side_max);
  v("height_min", c.scene.height_min);
  v("height_max", c.scene.height_max);
  v("gripper_radius", c.scene.gripper_radius);
  v("deep_probability", c.scene.deep_probability);
  v("min_gap", c.scene.min_gap);
  v("base_offset", c.scene.base_offset);
  v("max_attempts", c.scene.max_attempts);

  v.section({"visibility"});
  v("viewpoint_count", c.visibility.viewpoint_count);
  v("fov_half_angle", c.visibility.fov_half_angle);
  v("fan_half_angle", c.visibility.fan_half_angle);
  v("edge_inset", c.visibility.edge_inset);
  v("ray_count", c.visibility.ray_count);

  v.section({"motion"});
  v("step_size", c.motion.step_size);
  v("resolution", c.motion.resolution);
  v("apron_depth", c.motion.apron_depth);
  v("entry_depth", c.motion.entry_depth);
  v("smooth_iterations", c.motion.smooth_iterations);
  v("max_seconds", c.motion.budget.max_seconds);
  v("max_iterations", c.motion.budget.max_iterations);

  v.section({"oracle"});
  v("homotopy_paths", c.oracle.homotopy_paths);
  v("step_limit", c.oracle.step_limit);
  v("distance_cost_cap", c.oracle.distance_cost_cap);

  v.section({"dataset"});
  v("scenes", c.dataset.scenes);
  v("seed", c.dataset.seed);
  v("heldout_scenes", c.dataset.heldout_scenes);
  v("heldout_seed", c.dataset.heldout_seed);

  for (auto* net : {&c.training.osnet, &c.training.rpnet}) {
    v.section({"training", nn::to_string(net->kind)});
    v("d", net->d);
    v("heads", net->heads);
    v("layers", net->layers);
    v("ff", net->ff);
    v("hidden", net->hidden);
  }
  for (auto [name, tc] : {std::pair{"osnet_train", &c.training.osnet_train}, std::pair{"rpnet_train", &c.training.rpnet_train}}) {
    v.section({"training", name});
    v("learning_rate", tc->learning_rate);
    v("batch_size", tc->batch_size);
    v("epochs", tc->epochs);
    v("beta1", tc->beta1);
    v("beta2", tc->beta2);
    v("epsilon", tc->epsilon);
    v("clip_norm", tc->clip_norm);
    v("validation_split", tc->validation_split);
    v("seed", tc->seed);
  }
  v.section({"training"});
  v("rpnet_max_samples", c.training.rpnet_max_samples);

  v.section({"bench"});
  v("corpus_size", c.bench.corpus_size);
  v("corpus_seed", c.bench.corpus_seed);
  v("max_reachable_fraction", c.bench.max_reachable_fraction);
  v("seed", c.bench.seed);
  v("step_limit", c.bench.step_limit);
  v("region_attempts", c.bench.region_attempts);
  v("region_cost_ceiling", c.bench.region_cost_ceiling);
  v("planners", c.bench.planners);
}

struct Writer {
  json root = json::object();
  json* cur = &root;

  void section(const std::vector<std::string>& path) {
    cur = &root;
    for (const auto& p : path) cur = &(*cur)[p];
  }
  template <typename T>
  void operator()(const char* key, const T& value) {
    (*cur)[key] = value;
  }
  void operator()(const char* key, const std::vector<PlannerKind>& kinds) {
    json arr = json::array();
    for (auto k : kinds) arr.push_back(to_string(k));
    (*cur)[key] = std::move(arr);
  }
};

struct Reader {
  const json& root;
  const json* cur = nullptr;
  std::string prefix;
  std::set<std::string> seen;

  void section(const std::vector<std::string>& path) {
    cur = &root;
    prefix.clear();
    for (const auto& p : path) {
      prefix += p + ".";
      if (cur == nullptr || !cur->is_object() || !cur->contains(p)) {
        cur = nullptr;
        return;
      }
      cur = &(*cur)[p];
      if (!cur->is_object()) FieldReader("config").fail(prefix.substr(0, prefix.size() - 1), "expected an object");
    }
  }
  const json* find(const char* key) {
    seen.insert(prefix + key);
    if (cur == nullptr) return nullptr;
    auto it = cur->find(key);
    return it == cur->end() ? nullptr : &*it;
  }
  void operator()(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) FieldReader("config").fail(prefix + key, "expected a number");
      out = v->get<double>();
    }
  }
  void operator()(const char* key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) FieldReader("config").fail(prefix + key, "expected an integer");
      out = v->get<int>();
    }
  }
  void operator()(const char* key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
        FieldReader("config").fail(prefix + key, "expected a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }
  void operator()(const char* key, std::vector<PlannerKind>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) FieldReader("config").fail(prefix + key, "expected an array of planner names");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) FieldReader("config").fail(prefix + key, "expected planner names");
        try {
          out.push_back(planner_from_string(e.get<std::string>()));
        } catch (const std::invalid_argument& err) {
          FieldReader("config").fail(prefix + key, err.what());
        }
      }
    }
  }
};

void collect_leaves(const json& j, const std::string& prefix, std::vector<std::string>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix + it.key();
    if (it->is_object() && !it->empty()) {
      collect_leaves(*it, key + ".", out);
    } else {
      out.push_back(key);
    }
  }
}

}  // namespace

std::string config_to_string(const RunConfig& c) {
  RunConfig copy = c;
  Writer w;
  visit(copy, w);
  return w.root.dump(2) + "\n";
}

RunConfig config_from_string(const std::string& text, const RunConfig& base) {
  const json j = parse_json(text, "config");
  if (!j.is_object()) throw ParseError("config: expected a JSON object");
  RunConfig c = base;
  Reader r{j, nullptr, {}, {}};
  visit(c, r);
  std::vector<std::string> leaves;
  collect_leaves(j, "", leaves);
  for (const auto& leaf : leaves) {
    if (!r.seen.contains(leaf)) throw ParseError("config: unknown key '" + leaf + "'");
  }
  try {
    c.validate();
  } catch (const std::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_string(ss.str(), base);
}

void save_config(const std::string& path, const RunConfig& c) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config " + path);
  out << config_to_string(c);
}

}  // namespace retrieve
