// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "mcod/tensor.hpp"

namespace mcod {

/// Handle to a node on a Tape.
struct Var {
  int index = -1;
  bool valid() const { return index >= 0; }
};

enum class Recording { off, on };

/// Reverse-mode differentiation tape. A tape is built for one forward pass,
/// backward() is called at most once, and the tape is then discarded; no graph
/// state survives across training steps.
///
/// Leaves registered through leaf() receive their gradients back into the
/// source tensor's grad slot. Values registered through constant() take part
/// in the forward computation but block gradient flow, which is how momentum
/// encoder outputs and memory prototypes enter a loss without being trained.
///
/// With Recording::off the tape evaluates forward values only; ops skip all
/// backward bookkeeping. Both modes share the same kernels, so a traced and an
/// untraced forward pass are bit-identical.
class Tape {
 public:
  explicit Tape(Recording recording = Recording::on) : recording_(recording) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable leaf. After backward(), t.grad() holds dRoot/dt.
  Var leaf(Tensor& t);

  /// Non-differentiable input.
  Var constant(Tensor t);

  /// Forward value of a node. The reference is invalidated by the next op
  /// recorded on this tape; copy it if it must outlive further building.
  const Tensor& value(Var v) const { return nodes_[static_cast<std::size_t>(v.index)].value; }
  const std::vector<double>& grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.index)].requires_grad; }
  std::size_t node_count() const { return nodes_.size(); }

  // Elementwise and shape ops.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var square(Var a);
  Var scale(Var a, double s);
  Var relu(Var a);
  Var reshape(Var a, std::vector<int> shape);

  /// a: [n,k], row: [k]; adds row to every row of a.
  Var add_rowwise(Var a, Var row);

  /// Matrix product with optional transposes; a: [n,m] (or [m,n] if trans_a).
  Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false);
  Var transpose(Var a);

  /// [n,d] x [n,d] -> [n]: per-row dot products.
  Var rowwise_dot(Var a, Var b);

  /// [n,a] ++ [n,b] -> [n,a+b].
  Var concat_cols(Var a, Var b);

  Var softmax_rows(Var a);
  Var l2_normalize_rows(Var a);
  Var logsumexp_rows(Var a);

  /// [k,k] -> [k], main diagonal.
  Var diag(Var a);

  Var sum(Var a);       // -> [1]
  Var sum_cols(Var a);  // [n,k] -> [k], summing over rows

  /// NHWC convolution, odd square kernel, stride 1, zero "same" padding.
  /// in: [n,h,w,ci], w: [k,k,ci,co], bias: [co].
  Var conv2d(Var in, Var w, Var bias);

  /// 2x2 average pooling, stride 2; h and w must be even.
  Var avgpool2(Var in);

  /// Accumulates gradients of `root` (which must be scalar) into every
  /// reachable leaf's source tensor. May be called once per tape.
  void backward(Var root);

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    std::function<void()> backprop;  // empty for leaves/constants
    bool requires_grad = false;
    Tensor* source = nullptr;  // leaf write-back target
  };

  Var push(Tensor value, bool requires_grad, std::function<void()> backprop);
  Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.index)]; }
  const Node& node(Var v) const { return nodes_[static_cast<std::size_t>(v.index)]; }
  std::vector<double>& grad_buf(Var v);
  bool track(Var a) const { return recording_ == Recording::on && node(a).requires_grad; }
  bool track(Var a, Var b) const {
    return recording_ == Recording::on && (node(a).requires_grad || node(b).requires_grad);
  }

  std::vector<Node> nodes_;
  Recording recording_;
  bool backward_done_ = false;
};

}  // namespace mcod
