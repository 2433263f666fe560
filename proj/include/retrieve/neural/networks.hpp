// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "retrieve/neural/tape.hpp"
#include "retrieve/oracle.hpp"
#include "retrieve/scene.hpp"

namespace retrieve::nn {

enum class NetKind { osnet, rpnet };

std::string to_string(NetKind k);
NetKind net_kind_from_string(const std::string& s);

struct NetSpec {
  NetKind kind = NetKind::osnet;
  int d = 64;
  int heads = 4;
  int layers = 2;
  int ff = 128;
  int hidden = 128;  // width of the α, γ, κ and head MLPs

  void validate() const;
  bool operator==(const NetSpec&) const = default;
};

struct Network {
  NetSpec spec;
  ParamMap params;

  std::size_t parameter_count() const;
  void zero_grad();
};

/// Fresh network with Glorot weights drawn from `seed`.
Network make_network(const NetSpec& spec, std::uint64_t seed);

inline constexpr int kObjectFeatures = 6;
inline constexpr int kRegionFeatures = 4;

/// Normalized per-token input features. Coordinates and sizes are divided by
/// the cabinet extents.
struct TokenFeatures {
  Tensor robot;     // 1 x 6, base position zero padded
  Tensor gripper;   // 1 x 6: x, y, z, sin yaw, cos yaw, 0
  Tensor target;    // 1 x 6: centre then dims
  Tensor others;    // m x 6, ascending id
  std::vector<ObjectId> other_ids;
  Tensor regions;   // b x 4: centre, observed flag
  Tensor selected;  // 1 x 6 when an object was selected, else empty

  /// OSNet token count, m + 3.
  int token_count() const { return static_cast<int>(others.rows()) + 3; }
};

/// Throws std::invalid_argument when `selected` is not a non-target object.
TokenFeatures encode_inputs(const SceneState& s, std::optional<ObjectId> selected = std::nullopt);

/// Recorded graphs; outputs are column vectors of squashed head values.
Var osnet_graph(Tape& t, Network& net, const TokenFeatures& x);
Var rpnet_graph(Tape& t, Network& net, const TokenFeatures& x);

struct OsnetOutput {
  std::vector<ObjectId> ids;
  std::vector<Scalar> raw;            // per-object head outputs in [0, 1]
  BlockingDistribution distribution;  // raw / sum(raw)

  /// Argmax of the raw outputs, ties to the lowest id.
  ObjectId argmax() const;
};

OsnetOutput osnet_forward(const Network& net, const TokenFeatures& x);
RegionCosts rpnet_forward(const Network& net, const TokenFeatures& x);

/// RPNet encoder output, which does not depend on the selected object; lets
/// callers score several candidate objects against one scene encoding.
struct RpnetMemory {
  Tensor z;      // encoder tokens after the final normalization
  Tensor kappa;  // region embeddings
  std::vector<Tensor> cross_k, cross_v;  // per decoder layer, projected from z
};

RpnetMemory rpnet_encode(const Network& net, const TokenFeatures& x);
/// `selected` is the 1 x 6 feature row of the object to place.
RegionCosts rpnet_decode(const Network& net, const RpnetMemory& memory, const Tensor& selected);

/// Weight file: JSON with the spec header, a version tag and every tensor as
/// nested row arrays.
void save_params(const std::string& path, const Network& net);
std::string params_to_string(const Network& net);
/// Throws ShapeError if the file's spec or any tensor shape differs from
/// `expected` (when given) or from the spec stored in the file.
Network load_params(const std::string& path, const std::optional<NetSpec>& expected = std::nullopt);
Network params_from_string(const std::string& text, const std::optional<NetSpec>& expected = std::nullopt);

}  // namespace retrieve::nn
