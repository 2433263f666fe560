// SPDX-License-Identifier: Apache-2.0
#include "retrieve/neural/tape.hpp"

#include <cmath>

namespace retrieve::nn {

namespace {

void require_shape(bool ok, const char* op) {
  if (!ok) throw ShapeError(std::string("shape mismatch in ") + op);
}

}  // namespace

Var Tape::push(Tensor value, const char* op) {
  // x - x is exactly 0 for finite x and NaN otherwise; one pass, unlike allFinite().
  if ((value.array() - value.array()).sum() != 0) throw NumericError(std::string("non-finite activation in ") + op);
  nodes_.push_back(Node{std::move(value), Tensor(), nullptr, nullptr});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad_of(int id) {
  Node& n = node(id);
  if (n.grad.size() == 0) {
    const Tensor& v = value(Var{id});
    n.grad = Tensor::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

Var Tape::constant(Tensor v) { return push(std::move(v), "constant"); }

Var Tape::param(Parameter& p) {
  nodes_.push_back(Node{Tensor(), Tensor(), &p, nullptr});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::linear(Var x, Var w, Var b) {
  const Tensor& X = value(x);
  const Tensor& W = value(w);
  const Tensor& B = value(b);
  require_shape(X.cols() == W.rows() && B.rows() == 1 && B.cols() == W.cols(), "linear");
  Tensor y = X * W;
  y.rowwise() += B.row(0);
  Var out = push(std::move(y), "linear");
  if (record_) {
    node(out.id).back = [out, x, w, b](Tape& t) {
      const Tensor& G = t.node(out.id).grad;
      t.grad_of(x.id).noalias() += G * t.value(w).transpose();
      t.grad_of(w.id).noalias() += t.value(x).transpose() * G;
      t.grad_of(b.id) += G.colwise().sum();
    };
  }
  return out;
}

Var Tape::add(Var a, Var b) {
  require_shape(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "add");
  Var out = push(value(a) + value(b), "add");
  if (record_) {
    node(out.id).back = [out, a, b](Tape& t) {
      const Tensor& G = t.node(out.id).grad;
      t.grad_of(a.id) += G;
      t.grad_of(b.id) += G;
    };
  }
  return out;
}

Var Tape::add_row(Var a, Var row) {
  require_shape(value(row).rows() == 1 && value(row).cols() == value(a).cols(), "add_row");
  Tensor y = value(a);
  y.rowwise() += value(row).row(0);
  Var out = push(std::move(y), "add_row");
  if (record_) {
    node(out.id).back = [out, a, row](Tape& t) {
      const Tensor& G = t.node(out.id).grad;
      t.grad_of(a.id) += G;
      t.grad_of(row.id) += G.colwise().sum();
    };
  }
  return out;
}

Var Tape::relu(Var x) {
  Var out = push(value(x).cwiseMax(0.0), "relu");
  if (track_kinks_) {
    const Tensor& v = value(x);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      kink_signature_ = (kink_signature_ ^ (v.data()[i] > 0 ? 1u : 0u)) * 0x100000001b3ull;
    }
  }
  if (record_) {
    node(out.id).back = [out, x](Tape& t) {
      const Tensor& G = t.node(out.id).grad;
      t.grad_of(x.id) += (t.value(x).array() > 0).select(G, 0.0);
    };
  }
  return out;
}

Var Tape::sigmoid(Var x) {
  Tensor y = (1.0 + (-value(x).array()).exp()).inverse().matrix();
  Var out = push(std::move(y), "sigmoid");
  if (record_) {
    node(out.id).back = [out, x](Tape& t) {
      const Tensor& Y = t.value(out);
      const Tensor& G = t.node(out.id).grad;
      t.grad_of(x.id).array() += G.array() * Y.array() * (1.0 - Y.array());
    };
  }
  return out;
}

Var Tape::layer_norm(Var x, Var gain, Var bias, Scalar eps) {
  const Tensor& X = value(x);
  const auto n = X.cols();
  require_shape(value(gain).rows() == 1 && value(gain).cols() == n && value(bias).cols() == n, "layer_norm");
  const VectorX<Scalar> mean = X.rowwise().mean();
  Tensor centered = X.colwise() - mean;
  const VectorX<Scalar> inv_std =
      ((centered.array().square().rowwise().sum() / static_cast<Scalar>(n)) + eps).rsqrt().matrix();
  Tensor xhat = inv_std.asDiagonal() * centered;
  Tensor y = xhat.array().rowwise() * value(gain).row(0).array();
  y.rowwise() += value(bias).row(0);
  Var out = push(std::move(y), "layer_norm");
  if (record_) {
    node(out.id).back = [out, x, gain, bias, xhat = std::move(xhat), inv_std](Tape& t) {
      const Tensor& G = t.node(out.id).grad;
      const auto cols = static_cast<Scalar>(G.cols());
      t.grad_of(gain.id) += (G.array() * xhat.array()).colwise().sum().matrix();
      t.grad_of(bias.id) += G.colwise().sum();
      const Tensor dxhat = G.array().rowwise() * t.value(gain).row(0).array();
      const VectorX<Scalar> mean_d = dxhat.rowwise().sum() / cols;
      const VectorX<Scalar> mean_dx = (dxhat.array() * xhat.array()).rowwise().sum().matrix() / cols;
      Tensor dx = dxhat;
      dx.colwise() -= mean_d;
      dx -= mean_dx.asDiagonal() * xhat;
      t.grad_of(x.id) += inv_std.asDiagonal() * dx;
    };
  }
  return out;
}

Var Tape::attention(Var q, Var k, Var v, int heads) {
  const Tensor& Q = value(q);
  const Tensor& K = value(k);
  const Tensor& V = value(v);
  const auto d = Q.cols();
  require_shape(heads > 0 && d % heads == 0 && K.cols() == d && V.cols() == d && K.rows() == V.rows(), "attention");
  const auto dh = d / heads;
  const Scalar scale = 1.0 / std::sqrt(static_cast<Scalar>(dh));
  std::vector<Tensor> probs(static_cast<std::size_t>(heads));
  Tensor out_val(Q.rows(), d);
  for (int h = 0; h < heads; ++h) {
    Tensor s = scale * (Q.middleCols(h * dh, dh) * K.middleCols(h * dh, dh).transpose());
    const VectorX<Scalar> row_max = s.rowwise().maxCoeff();
    s.colwise() -= row_max;
    s = s.array().exp().matrix();
    const VectorX<Scalar> row_sum = s.rowwise().sum();
    s.array().colwise() *= row_sum.cwiseInverse().array();
    out_val.middleCols(h * dh, dh).noalias() = s * V.middleCols(h * dh, dh);
    probs[static_cast<std::size_t>(h)] = std::move(s);
  }
  Var out = push(std::move(out_val), "attention");
  if (record_) {
    node(out.id).back = [out, q, k, v, heads, dh, scale, probs = std::move(probs)](Tape& t) {
      const Tensor& G = t.node(out.id).grad;
      const Tensor& Qv = t.value(q);
      const Tensor& Kv = t.value(k);
      const Tensor& Vv = t.value(v);
      Tensor& dQ = t.grad_of(q.id);
      Tensor& dK = t.grad_of(k.id);
      Tensor& dV = t.grad_of(v.id);
      for (int h = 0; h < heads; ++h) {
        const Tensor& P = probs[static_cast<std::size_t>(h)];
        const auto Gh = G.middleCols(h * dh, dh);
        dV.middleCols(h * dh, dh).noalias() += P.transpose() * Gh;
        const Tensor dP = Gh * Vv.middleCols(h * dh, dh).transpose();
        const VectorX<Scalar> inner = (dP.array() * P.array()).rowwise().sum();
        Tensor dS = P.array() * (dP.colwise() - inner).array();
        dS *= scale;
        dQ.middleCols(h * dh, dh).noalias() += dS * Kv.middleCols(h * dh, dh);
        dK.middleCols(h * dh, dh).noalias() += dS.transpose() * Qv.middleCols(h * dh, dh);
      }
    };
  }
  return out;
}

Var Tape::rows(Var x, int begin, int count) {
  require_shape(begin >= 0 && count >= 0 && begin + count <= value(x).rows(), "rows");
  Var out = push(value(x).middleRows(begin, count), "rows");
  if (record_) {
    node(out.id).back = [out, x, begin, count](Tape& t) {
      t.grad_of(x.id).middleRows(begin, count) += t.node(out.id).grad;
    };
  }
  return out;
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  Eigen::Index total = 0;
  const auto cols = value(parts.front()).cols();
  for (auto p : parts) {
    require_shape(value(p).cols() == cols, "concat_rows");
    total += value(p).rows();
  }
  Tensor y(total, cols);
  Eigen::Index at = 0;
  for (auto p : parts) {
    y.middleRows(at, value(p).rows()) = value(p);
    at += value(p).rows();
  }
  Var out = push(std::move(y), "concat_rows");
  if (record_) {
    node(out.id).back = [out, parts](Tape& t) {
      const Tensor& G = t.node(out.id).grad;
      Eigen::Index off = 0;
      for (auto p : parts) {
        const auto r = t.value(p).rows();
        t.grad_of(p.id) += G.middleRows(off, r);
        off += r;
      }
    };
  }
  return out;
}

Var Tape::mse(Var pred, const Tensor& target) {
  const Tensor& P = value(pred);
  require_shape(P.rows() == target.rows() && P.cols() == target.cols() && P.size() > 0, "mse");
  const Scalar n = static_cast<Scalar>(P.size());
  Tensor loss(1, 1);
  loss(0, 0) = (P - target).squaredNorm() / n;
  Var out = push(std::move(loss), "mse");
  if (record_) {
    node(out.id).back = [out, pred, target, n](Tape& t) {
      const Scalar g = t.node(out.id).grad(0, 0);
      t.grad_of(pred.id) += (2.0 * g / n) * (t.value(pred) - target);
    };
  }
  return out;
}

void Tape::backward(Var loss) {
  if (!record_) throw std::logic_error("tape was created without gradient recording");
  if (value(loss).size() != 1) throw ShapeError("backward needs a scalar loss");
  grad_of(loss.id).setOnes();
  for (int id = loss.id; id >= 0; --id) {
    Node& n = node(id);
    if (n.grad.size() == 0) continue;
    if (n.back) n.back(*this);
    if (n.param != nullptr) {
      if (!n.grad.allFinite()) throw NumericError("non-finite gradient");
      n.param->grad += n.grad;
    }
  }
}

}  // namespace retrieve::nn
