// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "retrieve/json_io.hpp"
#include "retrieve/neural/layers.hpp"
#include "retrieve/neural/networks.hpp"
#include "retrieve/neural/train.hpp"
#include "support.hpp"

using namespace retrieve;
using namespace retrieve::nn;
using retrieve::testing::corridor_scene;
using retrieve::testing::make_scene;

namespace {

NetSpec small(NetKind kind) {
  NetSpec s;
  s.kind = kind;
  s.d = 16;
  s.heads = 2;
  s.layers = 1;
  s.ff = 32;
  s.hidden = 32;
  return s;
}

SceneState generated(std::uint64_t seed) {
  for (;; ++seed) {
    try {
      return generate_scene(GenConfig{}, seed);
    } catch (const GenerationError&) {
    }
  }
}

// Same geometry with non-target ids relabelled by a random permutation and the
// object list shuffled.
SceneState relabelled(const SceneState& s, Rng& rng, std::map<ObjectId, ObjectId>* mapping) {
  std::vector<ObjectId> ids = s.non_target_ids();
  std::vector<ObjectId> fresh = ids;
  rng.shuffle(fresh);
  SceneState r = s;
  for (auto& o : r.objects) {
    if (o.is_target) continue;
    const auto k = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), o.id) - ids.begin());
    (*mapping)[o.id] = fresh[k];
    o.id = fresh[k];
  }
  rng.shuffle(r.objects);
  r.validate();
  return r;
}

Example random_example(NetKind kind, std::uint64_t seed) {
  const SceneState s = generated(seed);
  Example ex;
  ex.x = encode_inputs(s, kind == NetKind::rpnet ? std::optional<ObjectId>{1} : std::nullopt);
  Rng rng(seed);
  const auto n = kind == NetKind::osnet ? ex.x.others.rows() : ex.x.regions.rows();
  ex.target.resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) ex.target(i, 0) = rng.uniform(0, 1);
  return ex;
}

EpisodeSample corridor_sample() {
  const auto samples = generate_dataset({corridor_scene()}, DatasetConfig{});
  REQUIRE(samples.size() == 1);
  return samples.front();
}

}  // namespace

TEST_CASE("encoded inputs") {
  const SceneState s = generated(3);
  const TokenFeatures x = encode_inputs(s);
  const auto m = static_cast<int>(s.objects.size()) - 1;
  CHECK(x.token_count() == m + 3);
  CHECK(x.others.rows() == m);
  CHECK(x.regions.rows() == static_cast<Eigen::Index>(s.regions.size()));
  CHECK(x.others.cols() == kObjectFeatures);
  CHECK(x.regions.cols() == kRegionFeatures);
  CHECK(x.selected.size() == 0);
  CHECK(std::is_sorted(x.other_ids.begin(), x.other_ids.end()));

  SUBCASE("coordinates are normalized by the cabinet extents") {
    SceneState c = make_scene({{0.03, 0.03}, {0.06, 0.06}}, {{{0.53, 0.83}, {0.06, 0.06}}});
    const TokenFeatures f = encode_inputs(c);
    // Footprint corners land on 0 and 1.
    CHECK(f.target(0, 0) - 0.5 * f.target(0, 3) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(f.target(0, 1) - 0.5 * f.target(0, 4) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(f.others(0, 0) + 0.5 * f.others(0, 3) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.others(0, 1) + 0.5 * f.others(0, 4) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.gripper(0, 3) == doctest::Approx(std::sin(c.grasp.yaw)));
    CHECK(f.gripper(0, 4) == doctest::Approx(std::cos(c.grasp.yaw)));
  }
  SUBCASE("object list order does not change the features") {
    SceneState shuffled = s;
    Rng rng(1);
    rng.shuffle(shuffled.objects);
    const TokenFeatures y = encode_inputs(shuffled);
    CHECK(y.others == x.others);
    CHECK(y.target == x.target);
    CHECK(y.other_ids == x.other_ids);
  }
  SUBCASE("selection") {
    CHECK(encode_inputs(s, 1).selected == x.others.row(0));
    CHECK_THROWS_AS(encode_inputs(s, 0), std::invalid_argument);
    CHECK_THROWS_AS(encode_inputs(s, 99), std::invalid_argument);
  }
}

TEST_CASE("osnet outputs") {
  const Network net = make_network(small(NetKind::osnet), 4);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SceneState s = generated(seed);
    const OsnetOutput out = osnet_forward(net, encode_inputs(s));
    REQUIRE(out.raw.size() == s.objects.size() - 1);
    Scalar sum = 0;
    for (std::size_t i = 0; i < out.raw.size(); ++i) {
      CHECK(out.raw[i] > 0);
      CHECK(out.raw[i] < 1);
      sum += out.distribution.probs[i].second;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.ids == s.non_target_ids());
  }
  const SceneState one = make_scene({{0.28, 0.6}, {0.06, 0.06}}, {{{0.28, 0.3}, {0.1, 0.05}}});
  const OsnetOutput single = osnet_forward(net, encode_inputs(one));
  REQUIRE(single.distribution.probs.size() == 1);
  CHECK(single.distribution.probs.front().second == 1.0);
  CHECK(single.argmax() == 1);
}

TEST_CASE("outputs follow objects under relabelling") {
  const Network os = make_network(NetSpec{}, 11);
  NetSpec rp_spec;
  rp_spec.kind = NetKind::rpnet;
  const Network rp = make_network(rp_spec, 12);
  Rng rng(77);
  Scalar worst = 0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const SceneState s = generated(1000 + k);
    std::map<ObjectId, ObjectId> mapping;
    const SceneState r = relabelled(s, rng, &mapping);
    const OsnetOutput a = osnet_forward(os, encode_inputs(s));
    const OsnetOutput b = osnet_forward(os, encode_inputs(r));
    for (std::size_t i = 0; i < a.ids.size(); ++i) {
      const ObjectId to = mapping.at(a.ids[i]);
      const auto j = static_cast<std::size_t>(std::find(b.ids.begin(), b.ids.end(), to) - b.ids.begin());
      worst = std::max(worst, std::abs(a.raw[i] - b.raw[j]));
    }
    const ObjectId sel = s.non_target_ids().front();
    const RegionCosts ca = rpnet_forward(rp, encode_inputs(s, sel));
    const RegionCosts cb = rpnet_forward(rp, encode_inputs(r, mapping.at(sel)));
    for (std::size_t i = 0; i < ca.costs.size(); ++i) worst = std::max(worst, std::abs(ca.costs[i] - cb.costs[i]));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("rpnet outputs") {
  const Network net = make_network(small(NetKind::rpnet), 5);
  const SceneState s = generated(8);
  const RegionCosts a = rpnet_forward(net, encode_inputs(s, 1));
  const RegionCosts b = rpnet_forward(net, encode_inputs(s, 2));
  REQUIRE(a.costs.size() == s.regions.size());
  for (Scalar c : a.costs) {
    CHECK(c > 0);
    CHECK(c < 1);
  }
  CHECK(a.costs != b.costs);
  CHECK_THROWS_AS(rpnet_forward(net, encode_inputs(s)), std::invalid_argument);

  SUBCASE("cached encoder matches the full pass bit for bit") {
    const RpnetMemory mem = rpnet_encode(net, encode_inputs(s));
    for (ObjectId id : s.non_target_ids()) {
      const TokenFeatures x = encode_inputs(s, id);
      CHECK(rpnet_decode(net, mem, x.selected).costs == rpnet_forward(net, x).costs);
    }
  }
}

TEST_CASE("mean squared error") {
  CHECK(mse_loss({1, 2}, {1, 4}) == 2.0);
  CHECK(mse_loss({0.5}, {0.5}) == 0.0);
  CHECK_THROWS_AS(mse_loss({1, 2}, {1}), ShapeError);
  CHECK_THROWS_AS(mse_loss({}, {}), ShapeError);

  Tape t;
  Tensor p(3, 1);
  p << 0.1, 0.5, 0.9;
  Tensor y(3, 1);
  y << 0.0, 1.0, 1.0;
  CHECK(t.value(t.mse(t.constant(p), y))(0, 0) == doctest::Approx((0.01 + 0.25 + 0.01) / 3).epsilon(1e-12));
  CHECK_THROWS_AS(t.mse(t.constant(p), Tensor::Zero(2, 1)), ShapeError);
}

TEST_CASE("tape gradient of a linear layer matches the closed form") {
  Rng rng(3);
  Tensor x(4, 3), w(3, 2), b(1, 2), y(4, 2);
  for (Tensor* m : {&x, &w, &b, &y}) {
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = rng.uniform(-1, 1);
  }
  Parameter pw(w), pb(b);
  Tape t;
  const Var out = t.linear(t.constant(x), t.param(pw), t.param(pb));
  t.backward(t.mse(out, y));
  const Tensor r = (x * w).rowwise() + b.row(0) - y;
  const Tensor gw = 2.0 / static_cast<Scalar>(r.size()) * x.transpose() * r;
  const Tensor gb = 2.0 / static_cast<Scalar>(r.size()) * r.colwise().sum();
  CHECK((pw.grad - gw).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((pb.grad - gb).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("non-finite values raise numeric errors") {
  Tape t;
  CHECK_THROWS_AS(t.constant(Tensor::Constant(1, 1, std::numeric_limits<Scalar>::quiet_NaN())), NumericError);
  const Var big = t.constant(Tensor::Constant(1, 1, std::numeric_limits<Scalar>::max()));
  CHECK_THROWS_AS(t.add(big, big), NumericError);
}

TEST_CASE("analytic gradients agree with central differences") {
  for (NetKind kind : {NetKind::osnet, NetKind::rpnet}) {
    NetSpec spec;
    spec.kind = kind;
    Network net = make_network(spec, 21);
    const Example ex = random_example(kind, 40);
    const GradcheckReport rep = gradcheck(net, ex, 50, 1e-5, 99);
    CHECK(rep.entries.size() == 50);
    CHECK(rep.kink_skips < 50);
    INFO(to_string(kind));
    CHECK(rep.max_relative_error <= 1e-4);
    for (const auto& [name, p] : net.params) CHECK(p.grad.isZero());
  }
}

TEST_CASE("training") {
  const EpisodeSample sample = corridor_sample();

  SUBCASE("a single sample is memorised") {
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 1;
    for (NetKind kind : {NetKind::osnet, NetKind::rpnet}) {
      const auto res = train(small(kind), {make_example(kind, sample)}, cfg);
      INFO(to_string(kind));
      CHECK(res.validation_count == 0);
      CHECK(res.log.size() == 201);
      CHECK(evaluate_mse(res.net, {make_example(kind, sample)}) < 1e-3);
      CHECK(evaluate_mse(res.net, {make_example(kind, sample)}) <= res.log.front().train_mse);
    }
  }

  SUBCASE("runs are deterministic and never end worse than the start") {
    std::vector<EpisodeSample> samples;
    for (std::uint64_t seed = 0; samples.size() < 12; ++seed) {
      GenConfig g;
      g.m_min = 8;
      g.m_max = 12;
      g.side_min = 0.06;
      try {
        auto more = rollout_scene(generate_scene(g, seed), seed, DatasetConfig{});
        samples.insert(samples.end(), more.begin(), more.end());
      } catch (const GenerationError&) {
      }
    }
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 4;
    cfg.validation_split = 0.25;
    for (NetKind kind : {NetKind::osnet, NetKind::rpnet}) {
      const auto data = make_examples(kind, samples);
      const auto a = train(small(kind), data, cfg);
      const auto b = train(small(kind), data, cfg);
      CHECK(a.best_epoch == b.best_epoch);
      for (const auto& [name, p] : a.net.params) CHECK(p.value == b.net.params.at(name).value);
      CHECK(a.validation_count > 0);
      const Scalar best = a.log[static_cast<std::size_t>(a.best_epoch)].validation_mse;
      CHECK(best <= a.log.front().validation_mse);
      CHECK(evaluate_mse(a.net, data) >= 0);
    }
    CHECK(top1_agreement(train(small(NetKind::osnet), make_examples(NetKind::osnet, samples), cfg).net, samples) >= 0);
  }

  SUBCASE("splits are deterministic and disjoint") {
    const auto [tr, val] = split_indices(100, 0.2, 3);
    CHECK(val.size() == 20);
    CHECK(tr.size() == 80);
    for (auto i : val) CHECK(std::find(tr.begin(), tr.end(), i) == tr.end());
    CHECK(split_indices(100, 0.2, 3) == std::pair{tr, val});
    CHECK(split_indices(1, 0.2, 3).second.empty());
  }

  TrainConfig bad;
  bad.learning_rate = 0;
  CHECK_THROWS_AS(train(small(NetKind::osnet), {make_example(NetKind::osnet, sample)}, bad), std::invalid_argument);
}

TEST_CASE("weights round-trip") {
  const Network net = make_network(small(NetKind::rpnet), 6);
  const std::string path = "neural_roundtrip.json";
  save_params(path, net);
  const Network back = load_params(path, net.spec);
  CHECK(back.spec == net.spec);
  for (const auto& [name, p] : net.params) CHECK(back.params.at(name).value == p.value);
  CHECK(params_to_string(back) == params_to_string(net));
  std::remove(path.c_str());

  const SceneState s = generated(2);
  CHECK(rpnet_forward(back, encode_inputs(s, 1)).costs == rpnet_forward(net, encode_inputs(s, 1)).costs);

  NetSpec other = net.spec;
  other.d = 32;
  CHECK_THROWS_AS(params_from_string(params_to_string(net), other), ShapeError);
  CHECK_THROWS_AS(params_from_string(params_to_string(net), small(NetKind::osnet)), ShapeError);

  nlohmann::json doc = nlohmann::json::parse(params_to_string(net));
  doc["tensors"].begin()->erase(0);
  CHECK_THROWS_AS(params_from_string(doc.dump()), ShapeError);
}
