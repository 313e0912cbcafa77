// Copyright (c) 2026 The lsgan-motion Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reverse-mode automatic differentiation over dense tensors.
//
// Every primitive's vector-Jacobian product is itself built from recorded
// primitives, so a gradient produced with `create_graph = true` is an
// ordinary tape node and can be differentiated again (double backprop, as
// needed by the Wasserstein gradient penalty).

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string_view>
#include <vector>

#include "lsgan/tensor.hpp"

namespace lsgan::ad {

enum class OpKind {
  leaf,
  constant,
  matmul,
  matmul_nt,  // a * b^T
  matmul_tn,  // a^T * b
  transpose,
  add,
  sub,
  elementwise_mul,
  scale,  // a * x + b
  leaky_relu,
  sigmoid,
  tanh,
  square,
  sqrt,
  reciprocal,
  exp,
  log,
  softplus,
  sum,
  mean,
  sum_axis0,         // [B, n] -> [n]
  sum_axis1,         // [B, n] -> [B, 1]
  broadcast_scalar,  // [1] -> any shape
  broadcast_rows,    // [n] -> [B, n]
  broadcast_cols,    // [B, 1] -> [B, n]
  l2_norm,
  concat,  // along columns
  slice_cols,
  pad_cols,
  broadcast_add_bias,
  logsumexp_rows,  // [B, n] -> [B, 1]
  reshape,
  clamp,  // clamp to [a, b]
};

std::string_view op_name(OpKind kind);

/// Scalar/integer attributes that parameterize a primitive.
struct OpAttrs {
  double a = 0.0;  // scale factor, leaky slope
  double b = 0.0;  // scale offset
  std::size_t offset = 0;
  std::size_t extent = 0;  // slice width, padded width, broadcast count
  Shape shape;             // target shape for broadcast_scalar / reshape
};

struct TapeNode {
  OpKind op = OpKind::leaf;
  std::vector<std::size_t> inputs;
  Tensor value;
  OpAttrs attrs;
  bool requires_grad = false;
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives and
/// has not been truncated below the node.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Single-owner recording of a computation. Nodes live in a deque so
/// references to node values stay valid while backward appends new nodes.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value);
  Var constant(Tensor value);

  /// Evaluates primitive `kind` on `inputs` and records the result.
  Var apply(OpKind kind, const std::vector<Var>& inputs, const OpAttrs& attrs = {});

  const TapeNode& node(std::size_t id) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  void truncate(std::size_t size);

 private:
  std::deque<TapeNode> nodes_;
};

// Named primitives. Binary ops require both operands on the same tape.
Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);
Var matmul_tn(Var a, Var b);
Var transpose(Var x);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double a, double b = 0.0);
Var leaky_relu(Var x, double alpha);
Var relu(Var x);
Var sigmoid(Var x);
Var tanh(Var x);
Var square(Var x);
Var sqrt(Var x);
Var reciprocal(Var x);
Var exp(Var x);
Var log(Var x);
Var softplus(Var x);
Var sum(Var x);
Var mean(Var x);
Var sum_axis0(Var x);
Var sum_axis1(Var x);
Var broadcast_scalar(Var x, const Shape& shape);
Var broadcast_rows(Var x, std::size_t rows);
Var broadcast_cols(Var x, std::size_t cols);
Var l2_norm(Var x);
Var concat(Var a, Var b);
Var slice_cols(Var x, std::size_t offset, std::size_t width);
Var pad_cols(Var x, std::size_t offset, std::size_t total);
Var broadcast_add_bias(Var x, Var bias);
Var logsumexp_rows(Var x);
Var reshape(Var x, const Shape& shape);
Var clamp(Var x, double lo, double hi);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

/// Mean binary cross-entropy between sigmoid(logits) and targets, evaluated
/// as softplus(l) - t*l so log(0) is never formed.
Var bce_with_logits(Var logits, Var targets);
Tensor bce_with_logits(const Tensor& logits, const Tensor& targets);

/// Gradients of a scalar output with respect to requested leaves.
class GradientMap {
 public:
  const Tensor& operator[](Var leaf) const;
  /// Tape node holding the gradient; only available with create_graph.
  Var node(Var leaf) const;
  bool contains(Var leaf) const;
  std::size_t size() const noexcept { return ids_.size(); }

 private:
  friend GradientMap backward(Var, const std::vector<Var>&, bool);
  std::vector<std::size_t> ids_;
  std::vector<Tensor> values_;
  std::vector<Var> nodes_;
};

/// Reverse-mode gradients of `output` (one element) with respect to `leaves`.
/// With create_graph the gradients stay on the tape for further
/// differentiation; otherwise the backward nodes are discarded afterwards.
GradientMap backward(Var output, const std::vector<Var>& leaves, bool create_graph = false);

/// Gradient of `output` with respect to an arbitrary recorded node, kept on
/// the tape so penalties built from it remain differentiable.
Var grad_wrt_input(Var output, Var input);

using ScalarFn = std::function<Var(Var)>;

/// Compares autodiff against central differences of `f` at `x`. Returns the
/// largest |a - b| / max(1, |a|, |b|) over all entries.
double finite_diff_check(const ScalarFn& f, const Tensor& x, double eps);

}  // namespace lsgan::ad
