// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <sstream>

#include "retrieve/json_io.hpp"
#include "retrieve/neural/networks.hpp"
#include "retrieve/version.hpp"

namespace retrieve::nn {

using nlohmann::json;

std::string params_to_string(const Network& net) {
  json j;
  j["kind"] = to_string(net.spec.kind);
  j["d"] = net.spec.d;
  j["h"] = net.spec.heads;
  j["L"] = net.spec.layers;
  j["ff"] = net.spec.ff;
  j["hidden"] = net.spec.hidden;
  j["version"] = kVersion;
  json tensors = json::object();
  for (const auto& [name, p] : net.params) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) row.push_back(p.value(r, c));
      rows.push_back(std::move(row));
    }
    tensors[name] = std::move(rows);
  }
  j["tensors"] = std::move(tensors);
  return j.dump(1) + "\n";
}

void save_params(const std::string& path, const Network& net) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write weights " + path);
  out << params_to_string(net);
}

Network params_from_string(const std::string& text, const std::optional<NetSpec>& expected) {
  const std::string ctx = "weights";
  const json j = parse_json(text, ctx);
  FieldReader rd(ctx);
  NetSpec spec;
  const auto& kind = rd.member(j, "kind");
  if (!kind.is_string()) rd.fail("kind", "expected a string");
  spec.kind = net_kind_from_string(kind.get<std::string>());
  spec.d = rd.integer(j, "d");
  spec.heads = rd.integer(j, "h");
  spec.layers = rd.integer(j, "L");
  spec.ff = rd.integer(j, "ff");
  spec.hidden = rd.integer(j, "hidden");
  rd.member(j, "version");
  if (expected && !(*expected == spec)) throw ShapeError("weight file spec differs from the expected network spec");

  Network net = make_network(spec, 0);
  const json& tensors = rd.object(j, "tensors");
  if (tensors.size() != net.params.size()) throw ShapeError("weight file tensor count differs from the network spec");
  for (auto& [name, p] : net.params) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ShapeError("weight file lacks tensor " + name);
    const json& rows = *it;
    if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != p.value.rows()) {
      throw ShapeError("tensor " + name + " has the wrong row count");
    }
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      const json& row = rows[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != p.value.cols()) {
        throw ShapeError("tensor " + name + " has the wrong column count");
      }
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        const json& v = row[static_cast<std::size_t>(c)];
        if (!v.is_number()) rd.fail("tensors." + name, "expected numbers");
        p.value(r, c) = v.get<double>();
      }
    }
  }
  return net;
}

Network load_params(const std::string& path, const std::optional<NetSpec>& expected) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open weights " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return params_from_string(ss.str(), expected);
}

}  // namespace retrieve::nn
