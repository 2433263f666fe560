// SPDX-License-Identifier: Apache-2.0
#include "retrieve/neural/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "retrieve/rng.hpp"

namespace retrieve::nn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0) || batch_size <= 0 || epochs <= 0 || !(beta1 > 0 && beta1 < 1) ||
      !(beta2 > 0 && beta2 < 1) || !(epsilon > 0) || !(clip_norm > 0)) {
    throw std::invalid_argument("training hyperparameters must be positive");
  }
  if (!(validation_split > 0 && validation_split < 1)) throw std::invalid_argument("validation split must lie in (0, 1)");
}

Example make_example(NetKind kind, const EpisodeSample& s) {
  Example ex;
  if (kind == NetKind::osnet) {
    ex.x = encode_inputs(s.scene);
    ex.target.resize(static_cast<Eigen::Index>(ex.x.other_ids.size()), 1);
    for (std::size_t i = 0; i < ex.x.other_ids.size(); ++i) {
      ex.target(static_cast<Eigen::Index>(i), 0) = s.osnet_label.probability(ex.x.other_ids[i]);
    }
  } else {
    ex.x = encode_inputs(s.scene, s.selected);
    if (s.rpnet_label.costs.size() != s.scene.regions.size()) throw ShapeError("rpnet label length differs from region count");
    ex.target = Eigen::Map<const Tensor>(s.rpnet_label.costs.data(), static_cast<Eigen::Index>(s.rpnet_label.costs.size()), 1);
  }
  return ex;
}

std::vector<Example> make_examples(NetKind kind, const std::vector<EpisodeSample>& samples) {
  std::vector<Example> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(make_example(kind, s));
  return out;
}

Scalar mse_loss(const std::vector<Scalar>& pred, const std::vector<Scalar>& target) {
  if (pred.size() != target.size() || pred.empty()) throw ShapeError("mse needs equal nonzero lengths");
  Scalar sum = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += (pred[i] - target[i]) * (pred[i] - target[i]);
  return sum / static_cast<Scalar>(pred.size());
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, Scalar validation_split,
                                                                            std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (n < 2) return {idx, {}};
  Rng rng(derive_seed(seed, {0x5b1}));
  rng.shuffle(idx);
  auto val = static_cast<std::size_t>(std::llround(validation_split * static_cast<Scalar>(n)));
  val = std::clamp<std::size_t>(val, 1, n - 1);
  std::vector<std::size_t> v(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(val));
  std::vector<std::size_t> tr(idx.begin() + static_cast<std::ptrdiff_t>(val), idx.end());
  std::sort(v.begin(), v.end());
  std::sort(tr.begin(), tr.end());
  return {tr, v};
}

Scalar example_loss(Network& net, const Example& ex, bool accumulate, std::uint64_t* kinks) {
  Tape t(accumulate);
  t.track_kinks(kinks != nullptr);
  const Var y = net.spec.kind == NetKind::osnet ? osnet_graph(t, net, ex.x) : rpnet_graph(t, net, ex.x);
  const Var loss = t.mse(y, ex.target);
  if (accumulate) t.backward(loss);
  if (kinks) *kinks = t.kink_signature();
  return t.value(loss)(0, 0);
}

Scalar evaluate_mse(const Network& net, const std::vector<Example>& data) {
  if (data.empty()) return 0;
  Scalar sum = 0;
  // Inference tapes leave the parameters untouched.
  for (const auto& ex : data) sum += example_loss(const_cast<Network&>(net), ex, false);
  return sum / static_cast<Scalar>(data.size());
}

Scalar top1_agreement(const Network& osnet, const std::vector<EpisodeSample>& samples) {
  if (samples.empty()) return 0;
  int hits = 0;
  for (const auto& s : samples) {
    const ObjectId pred = osnet_forward(osnet, encode_inputs(s.scene)).argmax();
    const auto top = s.osnet_label.argmax_set();
    hits += std::find(top.begin(), top.end(), pred) != top.end() ? 1 : 0;
  }
  return static_cast<Scalar>(hits) / static_cast<Scalar>(samples.size());
}

namespace {

void adam_step(Network& net, const TrainConfig& cfg, int step, Scalar batch_scale) {
  Scalar norm2 = 0;
  for (auto& [name, p] : net.params) {
    p.grad *= batch_scale;
    norm2 += p.grad.squaredNorm();
  }
  const Scalar norm = std::sqrt(norm2);
  const Scalar clip = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
  const Scalar c1 = 1.0 - std::pow(cfg.beta1, step);
  const Scalar c2 = 1.0 - std::pow(cfg.beta2, step);
  for (auto& [name, p] : net.params) {
    p.grad *= clip;
    p.m = cfg.beta1 * p.m + (1.0 - cfg.beta1) * p.grad;
    p.v = cfg.beta2 * p.v + (1.0 - cfg.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= cfg.learning_rate * (p.m.array() / c1) / ((p.v.array() / c2).sqrt() + cfg.epsilon);
    if (!p.value.allFinite()) throw NumericError("non-finite parameter " + name);
    p.grad.setZero();
  }
}

std::vector<Example> gather(const std::vector<Example>& data, const std::vector<std::size_t>& idx) {
  std::vector<Example> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(data[i]);
  return out;
}

}  // namespace

TrainResult train(const NetSpec& spec, const std::vector<Example>& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("training needs a nonempty dataset");
  const auto [tr_idx, val_idx] = split_indices(data.size(), cfg.validation_split, cfg.seed);
  const auto train_set = gather(data, tr_idx);
  const auto val_set = gather(data, val_idx);

  TrainResult res{make_network(spec, derive_seed(cfg.seed, {0x1417})), {}, 0, train_set.size(), val_set.size()};
  Network net = res.net;
  // Without a validation split the network as it stands after the epoch is
  // scored on the training set; the logged train_mse is a running average
  // taken before each update and would not describe the stored parameters.
  auto selection = [&](const EpochLog& e) { return val_set.empty() ? evaluate_mse(net, train_set) : e.validation_mse; };

  res.log.push_back({0, evaluate_mse(net, train_set), evaluate_mse(net, val_set)});
  Scalar best = selection(res.log.back());

  Rng rng(derive_seed(cfg.seed, {0x0dd}));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  int step = 0;
  int batch_index = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    Scalar loss_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      try {
        for (std::size_t i = start; i < end; ++i) loss_sum += example_loss(net, train_set[order[i]], true);
        adam_step(net, cfg, ++step, 1.0 / static_cast<Scalar>(end - start));
      } catch (const NumericError& e) {
        throw NumericError("batch " + std::to_string(batch_index) + ": " + e.what());
      }
      ++batch_index;
    }
    res.log.push_back({epoch, loss_sum / static_cast<Scalar>(order.size()), evaluate_mse(net, val_set)});
    if (const Scalar score = selection(res.log.back()); score < best) {
      best = score;
      res.best_epoch = epoch;
      res.net = net;
    }
  }
  return res;
}

GradcheckReport gradcheck(Network& net, const Example& ex, int count, Scalar h, std::uint64_t seed) {
  std::vector<std::pair<std::string, Eigen::Index>> coords;
  for (const auto& [name, p] : net.params) {
    for (Eigen::Index i = 0; i < p.value.size(); ++i) coords.emplace_back(name, i);
  }
  Rng rng(seed);
  net.zero_grad();
  std::uint64_t base = 0;
  example_loss(net, ex, true, &base);
  GradcheckReport rep;
  while (static_cast<int>(rep.entries.size()) < count) {
    if (rep.kink_skips > 100 * count) throw NumericError("gradcheck: every probe straddles a relu kink");
    const auto& [name, flat] = coords[rng.index(coords.size())];
    Parameter& p = net.params.at(name);
    const Eigen::Index r = flat % p.value.rows();
    const Eigen::Index c = flat / p.value.rows();
    const Scalar orig = p.value(r, c);
    std::uint64_t up_sig = 0;
    std::uint64_t down_sig = 0;
    p.value(r, c) = orig + h;
    const Scalar up = example_loss(net, ex, false, &up_sig);
    p.value(r, c) = orig - h;
    const Scalar down = example_loss(net, ex, false, &down_sig);
    p.value(r, c) = orig;
    if (up_sig != base || down_sig != base) {
      ++rep.kink_skips;
      continue;
    }
    GradcheckEntry e{name, r, c, p.grad(r, c), (up - down) / (2 * h), 0};
    e.relative_error = std::abs(e.analytic - e.numeric) / std::max({std::abs(e.analytic), std::abs(e.numeric), 1e-6});
    rep.max_relative_error = std::max(rep.max_relative_error, e.relative_error);
    rep.entries.push_back(std::move(e));
  }
  net.zero_grad();
  return rep;
}

}  // namespace retrieve::nn
