// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "retrieve/types.hpp"

namespace retrieve::nn {

/// Dense 2D tensor. Token sets are (tokens x features).
using Tensor = MatrixX<Scalar>;

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trainable tensor with its gradient accumulator and Adam moments.
struct Parameter {
  Tensor value;
  Tensor grad;
  Tensor m;
  Tensor v;

  explicit Parameter(Tensor init = {})
      : value(std::move(init)),
        grad(Tensor::Zero(value.rows(), value.cols())),
        m(Tensor::Zero(value.rows(), value.cols())),
        v(Tensor::Zero(value.rows(), value.cols())) {}
};

/// Parameters keyed by stable dotted names; iteration order is the name order.
using ParamMap = std::map<std::string, Parameter>;

struct Var {
  int id = -1;
};

/// Reverse-mode tape over matrix-valued operations. Every op checks its
/// output for NaN/Inf. Parameter leaves reference the live Parameter, which
/// must outlive the tape and stay unchanged while it is in use; their
/// gradients accumulate into Parameter::grad.
class Tape {
 public:
  explicit Tape(bool record_gradients = true) : record_(record_gradients) { nodes_.reserve(512); }

  Var constant(Tensor v);
  Var param(Parameter& p);

  const Tensor& value(Var x) const {
    const Node& n = nodes_[static_cast<std::size_t>(x.id)];
    return n.param != nullptr ? n.param->value : n.value;
  }

  /// x W + 1 b^T with W (in x out) and b (1 x out).
  Var linear(Var x, Var w, Var b);
  Var add(Var a, Var b);
  /// Adds the 1 x n row to every row of a.
  Var add_row(Var a, Var row);
  Var relu(Var x);
  Var sigmoid(Var x);
  /// Per-row normalization followed by elementwise gain and bias (1 x n).
  Var layer_norm(Var x, Var gain, Var bias, Scalar eps = 1e-5);
  /// Multi-head scaled dot-product attention; q (nq x d), k and v (nk x d).
  Var attention(Var q, Var k, Var v, int heads);
  Var rows(Var x, int begin, int count);
  Var concat_rows(const std::vector<Var>& parts);
  /// Mean squared error against a constant target of the same shape (1 x 1).
  Var mse(Var pred, const Tensor& target);

  void backward(Var loss);

  /// When on, every relu folds its activation pattern into kink_signature().
  void track_kinks(bool on) { track_kinks_ = on; }
  std::uint64_t kink_signature() const { return kink_signature_; }

 private:
  struct Node {
    Tensor value;  // unused for parameter leaves, which read Parameter::value
    Tensor grad;
    Parameter* param = nullptr;
    std::function<void(Tape&)> back;
  };

  Var push(Tensor value, const char* op);
  Tensor& grad_of(int id);
  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }

  bool record_;
  bool track_kinks_ = false;
  std::uint64_t kink_signature_ = 0xcbf29ce484222325ull;
  std::vector<Node> nodes_;
};

}  // namespace retrieve::nn
