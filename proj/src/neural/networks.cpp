// SPDX-License-Identifier: Apache-2.0
#include "retrieve/neural/networks.hpp"

#include <stdexcept>

#include "retrieve/neural/layers.hpp"
#include "retrieve/rng.hpp"

namespace retrieve::nn {

std::string to_string(NetKind k) { return k == NetKind::osnet ? "osnet" : "rpnet"; }

NetKind net_kind_from_string(const std::string& s) {
  if (s == "osnet") return NetKind::osnet;
  if (s == "rpnet") return NetKind::rpnet;
  throw std::invalid_argument("unknown network kind '" + s + "'");
}

void NetSpec::validate() const {
  if (d <= 0 || heads <= 0 || layers <= 0 || ff <= 0 || hidden <= 0) throw ShapeError("network sizes must be positive");
  if (d % heads != 0) throw ShapeError("model dim must be divisible by the head count");
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void Network::zero_grad() {
  for (auto& [name, p] : params) p.grad.setZero();
}

Network make_network(const NetSpec& spec, std::uint64_t seed) {
  spec.validate();
  Network net{spec, {}};
  Rng rng(seed);
  ParamMap& p = net.params;
  init_mlp(p, "alpha", {kObjectFeatures, spec.hidden, spec.d}, rng);
  init_mlp(p, "gamma", {kObjectFeatures, spec.hidden, spec.d}, rng);
  if (spec.kind == NetKind::rpnet) init_mlp(p, "kappa", {kRegionFeatures, spec.hidden, spec.d}, rng);
  for (int l = 0; l < spec.layers; ++l) init_encoder_layer(p, "enc." + std::to_string(l), spec.d, spec.ff, rng);
  init_layer_norm(p, "enc.ln", spec.d);
  if (spec.kind == NetKind::rpnet) {
    for (int l = 0; l < spec.layers; ++l) init_decoder_layer(p, "dec." + std::to_string(l), spec.d, spec.ff, rng);
    init_layer_norm(p, "dec.ln", spec.d);
  }
  init_mlp(p, "head", {spec.d, spec.hidden, 1}, rng);
  return net;
}

namespace {

Var encoder(Tape& t, Network& net, Var tokens) {
  for (int l = 0; l < net.spec.layers; ++l) tokens = encoder_layer(t, net.params, "enc." + std::to_string(l), tokens, net.spec.heads);
  return layer_norm(t, net.params, "enc.ln", tokens);
}

Var head(Tape& t, Network& net, Var x) { return t.sigmoid(mlp(t, net.params, "head", x)); }

void require_kind(const Network& net, NetKind k) {
  if (net.spec.kind != k) throw ShapeError("expected a " + to_string(k) + " network, got " + to_string(net.spec.kind));
}

}  // namespace

Var osnet_graph(Tape& t, Network& net, const TokenFeatures& x) {
  require_kind(net, NetKind::osnet);
  const int m = static_cast<int>(x.others.rows());
  Tensor objs(2 + m, kObjectFeatures);
  objs << x.robot, x.target, x.others;
  const Var a = mlp(t, net.params, "alpha", t.constant(std::move(objs)));
  const Var g = mlp(t, net.params, "gamma", t.constant(x.gripper));
  const Var tokens = t.concat_rows({t.rows(a, 0, 1), g, t.rows(a, 1, 1 + m)});
  const Var z = encoder(t, net, tokens);
  return head(t, net, t.rows(z, 3, m));
}

namespace {

struct Encoded {
  Var z;
  Var kappa;
  std::vector<KeyValue> cross;  // per decoder layer
};

Encoded rpnet_encoder(Tape& t, Network& net, const TokenFeatures& x) {
  require_kind(net, NetKind::rpnet);
  Tensor objs(2, kObjectFeatures);
  objs << x.robot, x.target;
  const Var a = mlp(t, net.params, "alpha", t.constant(std::move(objs)));
  const Var g = mlp(t, net.params, "gamma", t.constant(x.gripper));
  const Var k = mlp(t, net.params, "kappa", t.constant(x.regions));
  Encoded e{encoder(t, net, t.concat_rows({t.rows(a, 0, 1), g, t.rows(a, 1, 1), k})), k, {}};
  for (int l = 0; l < net.spec.layers; ++l) {
    e.cross.push_back(project_kv(t, net.params, "dec." + std::to_string(l) + ".cross", e.z));
  }
  return e;
}

Var rpnet_decoder(Tape& t, Network& net, Encoded enc, const Tensor& selected) {
  if (selected.rows() != 1 || selected.cols() != kObjectFeatures) throw std::invalid_argument("rpnet needs a selected object");
  Var q = t.add_row(enc.kappa, mlp(t, net.params, "alpha", t.constant(selected)));
  for (int l = 0; l < net.spec.layers; ++l) {
    q = decoder_layer(t, net.params, "dec." + std::to_string(l), q, enc.cross[static_cast<std::size_t>(l)], net.spec.heads);
  }
  return head(t, net, layer_norm(t, net.params, "dec.ln", q));
}

}  // namespace

Var rpnet_graph(Tape& t, Network& net, const TokenFeatures& x) {
  if (x.selected.size() == 0) throw std::invalid_argument("rpnet needs a selected object");
  return rpnet_decoder(t, net, rpnet_encoder(t, net, x), x.selected);
}

RpnetMemory rpnet_encode(const Network& net, const TokenFeatures& x) {
  Tape t(false);
  // Inference tapes never write gradients, so the parameters stay untouched.
  const Encoded e = rpnet_encoder(t, const_cast<Network&>(net), x);
  RpnetMemory m{t.value(e.z), t.value(e.kappa), {}, {}};
  for (const auto& kv : e.cross) {
    m.cross_k.push_back(t.value(kv.k));
    m.cross_v.push_back(t.value(kv.v));
  }
  return m;
}

RegionCosts rpnet_decode(const Network& net, const RpnetMemory& memory, const Tensor& selected) {
  require_kind(net, NetKind::rpnet);
  Tape t(false);
  if (memory.cross_k.size() != static_cast<std::size_t>(net.spec.layers) || memory.cross_v.size() != memory.cross_k.size()) {
    throw ShapeError("rpnet memory does not match the network depth");
  }
  Encoded e{t.constant(memory.z), t.constant(memory.kappa), {}};
  for (std::size_t l = 0; l < memory.cross_k.size(); ++l) {
    e.cross.push_back({t.constant(memory.cross_k[l]), t.constant(memory.cross_v[l])});
  }
  const Tensor y = t.value(rpnet_decoder(t, const_cast<Network&>(net), e, selected));
  RegionCosts out;
  out.costs.assign(y.data(), y.data() + y.size());
  return out;
}

ObjectId OsnetOutput::argmax() const {
  if (ids.empty()) throw std::logic_error("no objects to rank");
  std::size_t best = 0;
  for (std::size_t i = 1; i < ids.size(); ++i) {
    if (raw[i] > raw[best]) best = i;
  }
  return ids[best];
}

OsnetOutput osnet_forward(const Network& net, const TokenFeatures& x) {
  Tape t(false);
  // Inference tapes never write gradients, so the parameters stay untouched.
  const Tensor y = t.value(osnet_graph(t, const_cast<Network&>(net), x));
  OsnetOutput out;
  out.ids = x.other_ids;
  Scalar sum = 0;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    out.raw.push_back(y(i, 0));
    sum += y(i, 0);
  }
  for (std::size_t i = 0; i < out.ids.size(); ++i) {
    out.distribution.probs.emplace_back(out.ids[i], sum > 0 ? out.raw[i] / sum : 1.0 / static_cast<Scalar>(out.ids.size()));
  }
  return out;
}

RegionCosts rpnet_forward(const Network& net, const TokenFeatures& x) {
  if (x.selected.size() == 0) throw std::invalid_argument("rpnet needs a selected object");
  return rpnet_decode(net, rpnet_encode(net, x), x.selected);
}

}  // namespace retrieve::nn
