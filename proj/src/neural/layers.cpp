// SPDX-License-Identifier: Apache-2.0
#include "retrieve/neural/layers.hpp"

#include <cmath>

namespace retrieve::nn {

namespace {

Parameter& lookup(ParamMap& p, const std::string& name) {
  auto it = p.find(name);
  if (it == p.end()) throw ShapeError("missing parameter " + name);
  return it->second;
}

Var param(Tape& t, ParamMap& p, const std::string& name) { return t.param(lookup(p, name)); }

}  // namespace

void init_linear(ParamMap& p, const std::string& name, int in, int out, Rng& rng) {
  const Scalar limit = std::sqrt(6.0 / static_cast<Scalar>(in + out));
  Tensor w(in, out);
  for (int i = 0; i < in; ++i) {
    for (int j = 0; j < out; ++j) w(i, j) = rng.uniform(-limit, limit);
  }
  p.insert_or_assign(name + ".W", Parameter(std::move(w)));
  p.insert_or_assign(name + ".b", Parameter(Tensor::Zero(1, out)));
}

void init_mlp(ParamMap& p, const std::string& name, const std::vector<int>& widths, Rng& rng) {
  if (widths.size() < 2) throw ShapeError("mlp needs at least one layer");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    if (widths[i] <= 0 || widths[i + 1] <= 0) throw ShapeError("mlp widths must be positive");
    init_linear(p, name + "." + std::to_string(i), widths[i], widths[i + 1], rng);
  }
}

void init_layer_norm(ParamMap& p, const std::string& name, int d) {
  p.insert_or_assign(name + ".g", Parameter(Tensor::Ones(1, d)));
  p.insert_or_assign(name + ".b", Parameter(Tensor::Zero(1, d)));
}

void init_attention(ParamMap& p, const std::string& name, int d, Rng& rng) {
  for (const char* proj : {"q", "k", "v", "o"}) init_linear(p, name + "." + proj, d, d, rng);
}

void init_encoder_layer(ParamMap& p, const std::string& name, int d, int ff, Rng& rng) {
  init_layer_norm(p, name + ".ln1", d);
  init_attention(p, name + ".attn", d, rng);
  init_layer_norm(p, name + ".ln2", d);
  init_mlp(p, name + ".ff", {d, ff, d}, rng);
}

void init_decoder_layer(ParamMap& p, const std::string& name, int d, int ff, Rng& rng) {
  init_layer_norm(p, name + ".ln1", d);
  init_attention(p, name + ".self", d, rng);
  init_layer_norm(p, name + ".ln2", d);
  init_attention(p, name + ".cross", d, rng);
  init_layer_norm(p, name + ".ln3", d);
  init_mlp(p, name + ".ff", {d, ff, d}, rng);
}

Var linear(Tape& t, ParamMap& p, const std::string& name, Var x) {
  return t.linear(x, param(t, p, name + ".W"), param(t, p, name + ".b"));
}

Var mlp(Tape& t, ParamMap& p, const std::string& name, Var x) {
  int layers = 0;
  while (p.count(name + "." + std::to_string(layers) + ".W") > 0) ++layers;
  if (layers == 0) throw ShapeError("missing mlp " + name);
  for (int i = 0; i < layers; ++i) {
    x = linear(t, p, name + "." + std::to_string(i), x);
    if (i + 1 < layers) x = t.relu(x);
  }
  return x;
}

Var layer_norm(Tape& t, ParamMap& p, const std::string& name, Var x) {
  return t.layer_norm(x, param(t, p, name + ".g"), param(t, p, name + ".b"));
}

KeyValue project_kv(Tape& t, ParamMap& p, const std::string& name, Var xkv) {
  return {linear(t, p, name + ".k", xkv), linear(t, p, name + ".v", xkv)};
}

Var attention(Tape& t, ParamMap& p, const std::string& name, Var xq, const KeyValue& kv, int heads) {
  const Var q = linear(t, p, name + ".q", xq);
  return linear(t, p, name + ".o", t.attention(q, kv.k, kv.v, heads));
}

Var attention(Tape& t, ParamMap& p, const std::string& name, Var xq, Var xkv, int heads) {
  return attention(t, p, name, xq, project_kv(t, p, name, xkv), heads);
}

Var encoder_layer(Tape& t, ParamMap& p, const std::string& name, Var x, int heads) {
  const Var n1 = layer_norm(t, p, name + ".ln1", x);
  x = t.add(x, attention(t, p, name + ".attn", n1, n1, heads));
  return t.add(x, mlp(t, p, name + ".ff", layer_norm(t, p, name + ".ln2", x)));
}

Var decoder_layer(Tape& t, ParamMap& p, const std::string& name, Var q, const KeyValue& memory, int heads) {
  const Var n1 = layer_norm(t, p, name + ".ln1", q);
  q = t.add(q, attention(t, p, name + ".self", n1, n1, heads));
  q = t.add(q, attention(t, p, name + ".cross", layer_norm(t, p, name + ".ln2", q), memory, heads));
  return t.add(q, mlp(t, p, name + ".ff", layer_norm(t, p, name + ".ln3", q)));
}

}  // namespace retrieve::nn
