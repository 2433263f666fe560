// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <json.hpp>

#include "retrieve/json_io.hpp"
#include "retrieve/scene.hpp"

namespace retrieve {

using nlohmann::json;

namespace {

json vec3_json(const Vec3& v) { return {{"x", v.x()}, {"y", v.y()}, {"z", v.z()}}; }

}  // namespace

json scene_to_json(const SceneState& s) {
  json j;
  j["spec"] = {{"dx", s.spec.dx},     {"dy", s.spec.dy},
               {"dz", s.spec.dz},     {"cell", s.spec.cell},
               {"opening_min", s.spec.opening_min}, {"opening_max", s.spec.opening_max}};
  j["robot_base"] = vec3_json(s.robot_base);
  j["grasp"] = {{"x", s.grasp.position.x()}, {"y", s.grasp.position.y()}, {"z", s.grasp.position.z()}, {"yaw", s.grasp.yaw}};
  j["gripper_radius"] = s.gripper_radius;
  json objects = json::array();
  for (const auto& o : s.objects) {
    objects.push_back({{"id", o.id},
                       {"cx", o.center.x()},
                       {"cy", o.center.y()},
                       {"cz", o.center.z()},
                       {"dx", o.dims.x()},
                       {"dy", o.dims.y()},
                       {"dz", o.dims.z()},
                       {"is_target", o.is_target}});
  }
  j["objects"] = std::move(objects);
  json regions = json::array();
  for (const auto& r : s.regions) {
    regions.push_back({{"cx", r.center.x()}, {"cy", r.center.y()}, {"cz", r.center.z()}, {"flag", r.observed ? 1 : 0}});
  }
  j["regions"] = std::move(regions);
  return j;
}

SceneState scene_from_json(const json& j, const std::string& context) {
  FieldReader rd(context);
  SceneState s;
  const json& spec = rd.object(j, "spec");
  s.spec.dx = rd.number(spec, "dx", "spec.");
  s.spec.dy = rd.number(spec, "dy", "spec.");
  s.spec.dz = rd.number(spec, "dz", "spec.");
  s.spec.cell = rd.number(spec, "cell", "spec.");
  s.spec.opening_min = rd.number(spec, "opening_min", "spec.");
  s.spec.opening_max = rd.number(spec, "opening_max", "spec.");
  const json& base = rd.object(j, "robot_base");
  s.robot_base = {rd.number(base, "x", "robot_base."), rd.number(base, "y", "robot_base."), rd.number(base, "z", "robot_base.")};
  const json& grasp = rd.object(j, "grasp");
  s.grasp.position = {rd.number(grasp, "x", "grasp."), rd.number(grasp, "y", "grasp."), rd.number(grasp, "z", "grasp.")};
  s.grasp.yaw = rd.number(grasp, "yaw", "grasp.");
  s.gripper_radius = rd.number(j, "gripper_radius");
  const json& objects = rd.array(j, "objects");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string p = "objects[" + std::to_string(i) + "].";
    const json& o = objects[i];
    ObjectState st;
    st.id = rd.integer(o, "id", p);
    st.center = {rd.number(o, "cx", p), rd.number(o, "cy", p), rd.number(o, "cz", p)};
    st.dims = {rd.number(o, "dx", p), rd.number(o, "dy", p), rd.number(o, "dz", p)};
    st.is_target = rd.boolean(o, "is_target", p);
    s.objects.push_back(st);
  }
  const json& regions = rd.array(j, "regions");
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const std::string p = "regions[" + std::to_string(i) + "].";
    const json& r = regions[i];
    Region reg;
    reg.center = {rd.number(r, "cx", p), rd.number(r, "cy", p), rd.number(r, "cz", p)};
    const int flag = rd.integer(r, "flag", p);
    if (flag != 0 && flag != 1) rd.fail(p + "flag", "must be 0 or 1");
    reg.observed = flag == 1;
    s.regions.push_back(reg);
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(context + ": invalid scene: " + e.what());
  }
  return s;
}

std::string serialize_scene(const SceneState& s) { return scene_to_json(s).dump(); }

SceneState deserialize_scene(std::string_view record, std::size_t line) {
  const std::string context = line > 0 ? "line " + std::to_string(line) : "record";
  return scene_from_json(parse_json(record, context), context);
}

std::vector<SceneState> read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file " + path);
  std::vector<SceneState> scenes;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    scenes.push_back(deserialize_scene(line, n));
  }
  return scenes;
}

void write_corpus(const std::string& path, const std::vector<SceneState>& scenes) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file " + path);
  for (const auto& s : scenes) out << serialize_scene(s) << '\n';
}

}  // namespace retrieve
