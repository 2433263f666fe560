// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "retrieve/neural/networks.hpp"
#include "retrieve/oracle.hpp"

namespace retrieve::nn {

struct TrainConfig {
  Scalar learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 50;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar epsilon = 1e-8;
  Scalar clip_norm = 1.0;
  Scalar validation_split = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Encoded input and its regression target (one row per output).
struct Example {
  TokenFeatures x;
  Tensor target;
};

Example make_example(NetKind kind, const EpisodeSample& s);
std::vector<Example> make_examples(NetKind kind, const std::vector<EpisodeSample>& samples);

/// Mean of squared differences; throws ShapeError on length mismatch.
Scalar mse_loss(const std::vector<Scalar>& pred, const std::vector<Scalar>& target);

struct EpochLog {
  int epoch = 0;  // 0 is the evaluation before any update
  Scalar train_mse = 0;
  Scalar validation_mse = 0;
};

struct TrainResult {
  Network net;  // parameters at the best epoch (training MSE when there is no validation split)
  std::vector<EpochLog> log;
  int best_epoch = 0;
  std::size_t train_count = 0;
  std::size_t validation_count = 0;
};

/// Deterministic (train, validation) index split. With one example the
/// validation set is empty and selection falls back to the training MSE.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, Scalar validation_split,
                                                                            std::uint64_t seed);

/// Adam with global gradient-norm clipping. The batch loss is the mean of the
/// per-example MSEs. NumericError messages name the offending batch.
TrainResult train(const NetSpec& spec, const std::vector<Example>& data, const TrainConfig& cfg);

/// Mean per-example MSE.
Scalar evaluate_mse(const Network& net, const std::vector<Example>& data);

/// Fraction of samples whose predicted argmax lies in the oracle's maximal set.
Scalar top1_agreement(const Network& osnet, const std::vector<EpisodeSample>& samples);

/// Loss of one example and, when `accumulate` is set, its gradients added to
/// Parameter::grad. `kinks` receives the relu activation-pattern signature.
Scalar example_loss(Network& net, const Example& ex, bool accumulate, std::uint64_t* kinks = nullptr);

struct GradcheckEntry {
  std::string name;
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  Scalar analytic = 0;
  Scalar numeric = 0;
  Scalar relative_error = 0;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  Scalar max_relative_error = 0;
  /// Draws rejected because the +-h probe changed some relu's sign.
  int kink_skips = 0;
};

/// Central differences on `count` scalar parameters drawn uniformly from all
/// weights. Relative error is |a - n| / max(|a|, |n|, 1e-6). A draw whose
/// +-h probe flips a relu is not differentiable within the stencil and is
/// redrawn; throws NumericError if that keeps happening.
GradcheckReport gradcheck(Network& net, const Example& ex, int count, Scalar h, std::uint64_t seed);

}  // namespace retrieve::nn
