// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>
#include <string>
#include <string_view>

#include "retrieve/scene.hpp"

namespace retrieve {

/// Field accessors that raise ParseError with record and field context.
class FieldReader {
 public:
  explicit FieldReader(std::string context) : context_(std::move(context)) {}

  [[noreturn]] void fail(const std::string& field, const std::string& why) const {
    throw ParseError(context_ + ": field '" + field + "': " + why);
  }

  const nlohmann::json& member(const nlohmann::json& j, const char* key, const std::string& prefix = {}) const {
    if (!j.is_object()) fail(prefix + key, "parent is not an object");
    auto it = j.find(key);
    if (it == j.end()) fail(prefix + key, "missing");
    return *it;
  }

  double number(const nlohmann::json& j, const char* key, const std::string& prefix = {}) const {
    const auto& v = member(j, key, prefix);
    if (!v.is_number()) fail(prefix + key, "expected a number");
    return v.get<double>();
  }

  int integer(const nlohmann::json& j, const char* key, const std::string& prefix = {}) const {
    const auto& v = member(j, key, prefix);
    if (!v.is_number_integer()) fail(prefix + key, "expected an integer");
    return v.get<int>();
  }

  bool boolean(const nlohmann::json& j, const char* key, const std::string& prefix = {}) const {
    const auto& v = member(j, key, prefix);
    if (!v.is_boolean()) fail(prefix + key, "expected a boolean");
    return v.get<bool>();
  }

  const nlohmann::json& object(const nlohmann::json& j, const char* key, const std::string& prefix = {}) const {
    const auto& v = member(j, key, prefix);
    if (!v.is_object()) fail(prefix + key, "expected an object");
    return v;
  }

  const nlohmann::json& array(const nlohmann::json& j, const char* key, const std::string& prefix = {}) const {
    const auto& v = member(j, key, prefix);
    if (!v.is_array()) fail(prefix + key, "expected an array");
    return v;
  }

 private:
  std::string context_;
};

inline nlohmann::json parse_json(std::string_view text, const std::string& context) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(context + ": " + e.what());
  }
}

nlohmann::json scene_to_json(const SceneState& s);
SceneState scene_from_json(const nlohmann::json& j, const std::string& context);

}  // namespace retrieve
