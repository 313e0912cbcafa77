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

#include "lsgan/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace lsgan::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

[[noreturn]] void shape_error(OpKind kind, const std::vector<const Tensor*>& in, const std::string& why) {
  std::string msg = std::string(op_name(kind)) + ": " + why + " (input shapes";
  for (const auto* t : in) msg += " " + shape_str(t->shape());
  msg += ")";
  throw std::invalid_argument(msg);
}

void expect_arity(OpKind kind, const std::vector<const Tensor*>& in, std::size_t n) {
  if (in.size() != n) shape_error(kind, in, "expects " + std::to_string(n) + " inputs");
}

void expect_rank2(OpKind kind, const std::vector<const Tensor*>& in, const Tensor& t) {
  if (t.rank() != 2) shape_error(kind, in, "requires rank-2 operands");
}

void expect_same(OpKind kind, const std::vector<const Tensor*>& in) {
  if (in[0]->shape() != in[1]->shape()) shape_error(kind, in, "operand shapes differ");
}

template <typename F>
Tensor map_unary(const Tensor& x, F f) {
  std::vector<double> out(x.size());
  const auto src = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(src[i]);
  return Tensor::computed(x.shape(), std::move(out));
}

template <typename F>
Tensor map_binary(const Tensor& a, const Tensor& b, F f) {
  std::vector<double> out(a.size());
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i], y[i]);
  return Tensor::computed(a.shape(), std::move(out));
}

// Shape with the same rank as `like`, but `cols` columns.
Shape with_cols(const Tensor& like, std::size_t cols) {
  if (like.rank() == 1) return {cols};
  return {like.rows(), cols};
}

double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor evaluate(OpKind kind, const std::vector<const Tensor*>& in, const OpAttrs& attrs) {
  switch (kind) {
    case OpKind::leaf:
    case OpKind::constant:
      throw std::logic_error("evaluate: leaf/constant are not computed");

    case OpKind::matmul: {
      expect_arity(kind, in, 2);
      const Tensor& a = *in[0];
      const Tensor& b = *in[1];
      expect_rank2(kind, in, a);
      expect_rank2(kind, in, b);
      if (a.cols() != b.rows()) shape_error(kind, in, "inner dimensions differ");
      std::vector<double> out(a.rows() * b.cols());
      MutMap(out.data(), a.rows(), b.cols()).noalias() =
          ConstMap(a.data().data(), a.rows(), a.cols()) * ConstMap(b.data().data(), b.rows(), b.cols());
      return Tensor::computed({a.rows(), b.cols()}, std::move(out));
    }
    case OpKind::matmul_nt: {
      expect_arity(kind, in, 2);
      const Tensor& a = *in[0];
      const Tensor& b = *in[1];
      expect_rank2(kind, in, a);
      expect_rank2(kind, in, b);
      if (a.cols() != b.cols()) shape_error(kind, in, "inner dimensions differ");
      std::vector<double> out(a.rows() * b.rows());
      MutMap(out.data(), a.rows(), b.rows()).noalias() =
          ConstMap(a.data().data(), a.rows(), a.cols()) * ConstMap(b.data().data(), b.rows(), b.cols()).transpose();
      return Tensor::computed({a.rows(), b.rows()}, std::move(out));
    }
    case OpKind::matmul_tn: {
      expect_arity(kind, in, 2);
      const Tensor& a = *in[0];
      const Tensor& b = *in[1];
      expect_rank2(kind, in, a);
      expect_rank2(kind, in, b);
      if (a.rows() != b.rows()) shape_error(kind, in, "inner dimensions differ");
      std::vector<double> out(a.cols() * b.cols());
      MutMap(out.data(), a.cols(), b.cols()).noalias() =
          ConstMap(a.data().data(), a.rows(), a.cols()).transpose() * ConstMap(b.data().data(), b.rows(), b.cols());
      return Tensor::computed({a.cols(), b.cols()}, std::move(out));
    }
    case OpKind::transpose: {
      expect_arity(kind, in, 1);
      const Tensor& x = *in[0];
      expect_rank2(kind, in, x);
      std::vector<double> out(x.size());
      MutMap(out.data(), x.cols(), x.rows()) = ConstMap(x.data().data(), x.rows(), x.cols()).transpose();
      return Tensor::computed({x.cols(), x.rows()}, std::move(out));
    }
    case OpKind::add:
      expect_arity(kind, in, 2);
      expect_same(kind, in);
      return map_binary(*in[0], *in[1], [](double x, double y) { return x + y; });
    case OpKind::sub:
      expect_arity(kind, in, 2);
      expect_same(kind, in);
      return map_binary(*in[0], *in[1], [](double x, double y) { return x - y; });
    case OpKind::elementwise_mul:
      expect_arity(kind, in, 2);
      expect_same(kind, in);
      return map_binary(*in[0], *in[1], [](double x, double y) { return x * y; });
    case OpKind::scale: {
      expect_arity(kind, in, 1);
      const double a = attrs.a, b = attrs.b;
      return map_unary(*in[0], [a, b](double x) { return a * x + b; });
    }
    case OpKind::leaky_relu: {
      expect_arity(kind, in, 1);
      const double alpha = attrs.a;
      return map_unary(*in[0], [alpha](double x) { return x >= 0 ? x : alpha * x; });
    }
    case OpKind::sigmoid:
      expect_arity(kind, in, 1);
      return map_unary(*in[0], stable_sigmoid);
    case OpKind::tanh:
      expect_arity(kind, in, 1);
      return map_unary(*in[0], [](double x) { return std::tanh(x); });
    case OpKind::square:
      expect_arity(kind, in, 1);
      return map_unary(*in[0], [](double x) { return x * x; });
    case OpKind::sqrt:
      expect_arity(kind, in, 1);
      for (double v : in[0]->data()) {
        if (v < 0) throw std::domain_error("sqrt: negative input " + std::to_string(v));
      }
      return map_unary(*in[0], [](double x) { return std::sqrt(x); });
    case OpKind::reciprocal:
      expect_arity(kind, in, 1);
      for (double v : in[0]->data()) {
        if (v == 0) throw std::domain_error("reciprocal: zero input");
      }
      return map_unary(*in[0], [](double x) { return 1.0 / x; });
    case OpKind::exp:
      expect_arity(kind, in, 1);
      return map_unary(*in[0], [](double x) { return std::exp(x); });
    case OpKind::log:
      expect_arity(kind, in, 1);
      for (double v : in[0]->data()) {
        if (v <= 0) throw std::domain_error("log: non-positive input " + std::to_string(v));
      }
      return map_unary(*in[0], [](double x) { return std::log(x); });
    case OpKind::softplus:
      expect_arity(kind, in, 1);
      return map_unary(*in[0], stable_softplus);
    case OpKind::sum:
    case OpKind::mean: {
      expect_arity(kind, in, 1);
      double s = 0.0;
      for (double v : in[0]->data()) s += v;
      if (kind == OpKind::mean) s /= static_cast<double>(in[0]->size());
      return Tensor::computed({1}, {s});
    }
    case OpKind::sum_axis0: {
      expect_arity(kind, in, 1);
      const Tensor& x = *in[0];
      expect_rank2(kind, in, x);
      std::vector<double> out(x.cols(), 0.0);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto row = x.row(r);
        for (std::size_t c = 0; c < x.cols(); ++c) out[c] += row[c];
      }
      return Tensor::computed({x.cols()}, std::move(out));
    }
    case OpKind::sum_axis1: {
      expect_arity(kind, in, 1);
      const Tensor& x = *in[0];
      expect_rank2(kind, in, x);
      std::vector<double> out(x.rows(), 0.0);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        for (double v : x.row(r)) out[r] += v;
      }
      return Tensor::computed({x.rows(), 1}, std::move(out));
    }
    case OpKind::broadcast_scalar: {
      expect_arity(kind, in, 1);
      if (in[0]->size() != 1) shape_error(kind, in, "source must hold one element");
      return Tensor::computed(attrs.shape, std::vector<double>(shape_numel(attrs.shape), (*in[0])[0]));
    }
    case OpKind::broadcast_rows: {
      expect_arity(kind, in, 1);
      const Tensor& x = *in[0];
      if (x.rank() != 1) shape_error(kind, in, "source must be rank 1");
      std::vector<double> out;
      out.reserve(attrs.extent * x.size());
      for (std::size_t r = 0; r < attrs.extent; ++r) out.insert(out.end(), x.data().begin(), x.data().end());
      return Tensor::computed({attrs.extent, x.size()}, std::move(out));
    }
    case OpKind::broadcast_cols: {
      expect_arity(kind, in, 1);
      const Tensor& x = *in[0];
      if (x.rank() != 2 || x.cols() != 1) shape_error(kind, in, "source must be [B, 1]");
      std::vector<double> out;
      out.reserve(attrs.extent * x.rows());
      for (std::size_t r = 0; r < x.rows(); ++r) out.insert(out.end(), attrs.extent, x[r]);
      return Tensor::computed({x.rows(), attrs.extent}, std::move(out));
    }
    case OpKind::l2_norm: {
      expect_arity(kind, in, 1);
      double s = 0.0;
      for (double v : in[0]->data()) s += v * v;
      return Tensor::computed({1}, {std::sqrt(s)});
    }
    case OpKind::concat: {
      expect_arity(kind, in, 2);
      const Tensor& a = *in[0];
      const Tensor& b = *in[1];
      if (a.rank() != b.rank() || a.rows() != b.rows()) shape_error(kind, in, "row counts differ");
      std::vector<double> out;
      out.reserve(a.size() + b.size());
      for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto ra = a.row(r);
        const auto rb = b.row(r);
        out.insert(out.end(), ra.begin(), ra.end());
        out.insert(out.end(), rb.begin(), rb.end());
      }
      return Tensor::computed(with_cols(a, a.cols() + b.cols()), std::move(out));
    }
    case OpKind::slice_cols: {
      expect_arity(kind, in, 1);
      const Tensor& x = *in[0];
      if (attrs.extent == 0 || attrs.offset + attrs.extent > x.cols()) shape_error(kind, in, "slice out of range");
      std::vector<double> out;
      out.reserve(x.rows() * attrs.extent);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto row = x.row(r).subspan(attrs.offset, attrs.extent);
        out.insert(out.end(), row.begin(), row.end());
      }
      return Tensor::computed(with_cols(x, attrs.extent), std::move(out));
    }
    case OpKind::pad_cols: {
      expect_arity(kind, in, 1);
      const Tensor& x = *in[0];
      if (attrs.offset + x.cols() > attrs.extent) shape_error(kind, in, "padding target too narrow");
      std::vector<double> out(x.rows() * attrs.extent, 0.0);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto row = x.row(r);
        std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(r * attrs.extent + attrs.offset));
      }
      return Tensor::computed(with_cols(x, attrs.extent), std::move(out));
    }
    case OpKind::broadcast_add_bias: {
      expect_arity(kind, in, 2);
      const Tensor& x = *in[0];
      const Tensor& b = *in[1];
      if (b.rank() != 1 || b.size() != x.cols()) shape_error(kind, in, "bias width must equal column count");
      std::vector<double> out = x.to_vector();
      const auto bias = b.data();
      for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) out[r * x.cols() + c] += bias[c];
      }
      return Tensor::computed(x.shape(), std::move(out));
    }
    case OpKind::logsumexp_rows: {
      expect_arity(kind, in, 1);
      const Tensor& x = *in[0];
      expect_rank2(kind, in, x);
      std::vector<double> out(x.rows());
      for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto row = x.row(r);
        const double m = *std::max_element(row.begin(), row.end());
        double s = 0.0;
        for (double v : row) s += std::exp(v - m);
        out[r] = m + std::log(s);
      }
      return Tensor::computed({x.rows(), 1}, std::move(out));
    }
    case OpKind::reshape: {
      expect_arity(kind, in, 1);
      if (shape_numel(attrs.shape) != in[0]->size()) shape_error(kind, in, "element count changes");
      return in[0]->reshaped(attrs.shape);
    }
    case OpKind::clamp: {
      expect_arity(kind, in, 1);
      const double lo = attrs.a, hi = attrs.b;
      return map_unary(*in[0], [lo, hi](double x) { return std::clamp(x, lo, hi); });
    }
  }
  throw std::logic_error("evaluate: unknown op");
}

Tape& same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw std::invalid_argument("autodiff: operands recorded on different tapes");
  return a.tape();
}

Var unary(OpKind kind, Var x, OpAttrs attrs = {}) { return x.tape().apply(kind, {x}, attrs); }

Var binary(OpKind kind, Var a, Var b) { return same_tape(a, b).apply(kind, {a, b}); }

// Vector-Jacobian products. `need[i]` says whether input i needs a gradient.
// Each rule is expressed in recorded primitives.
std::vector<std::optional<Var>> vjp(Tape& tape, std::size_t id, Var g, const std::vector<bool>& need) {
  const TapeNode& node = tape.node(id);
  const OpKind kind = node.op;
  const OpAttrs attrs = node.attrs;
  const std::vector<std::size_t> ins = node.inputs;
  const Var y(&tape, id);
  auto in = [&](std::size_t i) { return Var(&tape, ins[i]); };
  std::vector<std::optional<Var>> out(ins.size());
  auto set = [&](std::size_t i, auto&& make) {
    if (need[i]) out[i] = make();
  };

  switch (kind) {
    case OpKind::leaf:
    case OpKind::constant:
      break;
    case OpKind::matmul:
      set(0, [&] { return matmul_nt(g, in(1)); });
      set(1, [&] { return matmul_tn(in(0), g); });
      break;
    case OpKind::matmul_nt:
      set(0, [&] { return matmul(g, in(1)); });
      set(1, [&] { return matmul_tn(g, in(0)); });
      break;
    case OpKind::matmul_tn:
      set(0, [&] { return matmul_nt(in(1), g); });
      set(1, [&] { return matmul(in(0), g); });
      break;
    case OpKind::transpose:
      set(0, [&] { return transpose(g); });
      break;
    case OpKind::add:
      set(0, [&] { return g; });
      set(1, [&] { return g; });
      break;
    case OpKind::sub:
      set(0, [&] { return g; });
      set(1, [&] { return scale(g, -1.0); });
      break;
    case OpKind::elementwise_mul:
      set(0, [&] { return mul(g, in(1)); });
      set(1, [&] { return mul(g, in(0)); });
      break;
    case OpKind::scale:
      set(0, [&] { return scale(g, attrs.a); });
      break;
    case OpKind::leaky_relu:
      set(0, [&] {
        // Slope mask is piecewise constant; its derivative is zero a.e.
        const double alpha = attrs.a;
        Tensor mask = map_unary(in(0).value(), [alpha](double x) { return x >= 0 ? 1.0 : alpha; });
        return mul(g, tape.constant(std::move(mask)));
      });
      break;
    case OpKind::sigmoid:
      set(0, [&] { return mul(g, mul(y, scale(y, -1.0, 1.0))); });
      break;
    case OpKind::tanh:
      set(0, [&] { return mul(g, scale(square(y), -1.0, 1.0)); });
      break;
    case OpKind::square:
      set(0, [&] { return mul(g, scale(in(0), 2.0)); });
      break;
    case OpKind::sqrt:
      set(0, [&] { return mul(g, scale(reciprocal(y), 0.5)); });
      break;
    case OpKind::reciprocal:
      set(0, [&] { return mul(g, scale(square(y), -1.0)); });
      break;
    case OpKind::exp:
      set(0, [&] { return mul(g, y); });
      break;
    case OpKind::log:
      set(0, [&] { return mul(g, reciprocal(in(0))); });
      break;
    case OpKind::softplus:
      set(0, [&] { return mul(g, sigmoid(in(0))); });
      break;
    case OpKind::sum:
      set(0, [&] { return broadcast_scalar(g, in(0).shape()); });
      break;
    case OpKind::mean:
      set(0, [&] {
        const double n = static_cast<double>(in(0).value().size());
        return scale(broadcast_scalar(g, in(0).shape()), 1.0 / n);
      });
      break;
    case OpKind::sum_axis0:
      set(0, [&] { return broadcast_rows(g, in(0).value().rows()); });
      break;
    case OpKind::sum_axis1:
      set(0, [&] { return broadcast_cols(g, in(0).value().cols()); });
      break;
    case OpKind::broadcast_scalar:
      set(0, [&] {
        Var s = sum(g);
        return in(0).shape() == s.shape() ? s : reshape(s, in(0).shape());
      });
      break;
    case OpKind::broadcast_rows:
      set(0, [&] { return sum_axis0(g); });
      break;
    case OpKind::broadcast_cols:
      set(0, [&] { return sum_axis1(g); });
      break;
    case OpKind::l2_norm:
      set(0, [&] { return mul(broadcast_scalar(mul(g, reciprocal(y)), in(0).shape()), in(0)); });
      break;
    case OpKind::concat: {
      const std::size_t wa = in(0).value().cols();
      const std::size_t wb = in(1).value().cols();
      set(0, [&] { return slice_cols(g, 0, wa); });
      set(1, [&] { return slice_cols(g, wa, wb); });
      break;
    }
    case OpKind::slice_cols:
      set(0, [&] { return pad_cols(g, attrs.offset, in(0).value().cols()); });
      break;
    case OpKind::pad_cols:
      set(0, [&] { return slice_cols(g, attrs.offset, in(0).value().cols()); });
      break;
    case OpKind::broadcast_add_bias:
      set(0, [&] { return g; });
      set(1, [&] { return g.value().rank() == 2 ? sum_axis0(g) : reshape(g, in(1).shape()); });
      break;
    case OpKind::logsumexp_rows:
      set(0, [&] {
        const std::size_t n = in(0).value().cols();
        Var softmax = exp(sub(in(0), broadcast_cols(y, n)));
        return mul(broadcast_cols(g, n), softmax);
      });
      break;
    case OpKind::reshape:
      set(0, [&] { return reshape(g, in(0).shape()); });
      break;
    case OpKind::clamp:
      set(0, [&] {
        const double lo = attrs.a, hi = attrs.b;
        Tensor mask = map_unary(in(0).value(), [lo, hi](double x) { return x >= lo && x <= hi ? 1.0 : 0.0; });
        return mul(g, tape.constant(std::move(mask)));
      });
      break;
  }
  return out;
}

}  // namespace

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::leaf: return "leaf";
    case OpKind::constant: return "constant";
    case OpKind::matmul: return "matmul";
    case OpKind::matmul_nt: return "matmul_nt";
    case OpKind::matmul_tn: return "matmul_tn";
    case OpKind::transpose: return "transpose";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::elementwise_mul: return "elementwise_mul";
    case OpKind::scale: return "scale";
    case OpKind::leaky_relu: return "leaky_relu";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::tanh: return "tanh";
    case OpKind::square: return "square";
    case OpKind::sqrt: return "sqrt";
    case OpKind::reciprocal: return "reciprocal";
    case OpKind::exp: return "exp";
    case OpKind::log: return "log";
    case OpKind::softplus: return "softplus";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::sum_axis0: return "sum_axis0";
    case OpKind::sum_axis1: return "sum_axis1";
    case OpKind::broadcast_scalar: return "broadcast_scalar";
    case OpKind::broadcast_rows: return "broadcast_rows";
    case OpKind::broadcast_cols: return "broadcast_cols";
    case OpKind::l2_norm: return "l2_norm";
    case OpKind::concat: return "concat";
    case OpKind::slice_cols: return "slice_cols";
    case OpKind::pad_cols: return "pad_cols";
    case OpKind::broadcast_add_bias: return "broadcast_add_bias";
    case OpKind::logsumexp_rows: return "logsumexp_rows";
    case OpKind::reshape: return "reshape";
    case OpKind::clamp: return "clamp";
  }
  return "unknown";
}

const Tensor& Var::value() const { return tape_->node(id_).value; }

Var Tape::leaf(Tensor value) {
  nodes_.push_back(TapeNode{OpKind::leaf, {}, std::move(value), {}, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(TapeNode{OpKind::constant, {}, std::move(value), {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::apply(OpKind kind, const std::vector<Var>& inputs, const OpAttrs& attrs) {
  std::vector<const Tensor*> values;
  std::vector<std::size_t> ids;
  bool requires_grad = false;
  for (const Var& v : inputs) {
    if (&v.tape() != this) throw std::invalid_argument(std::string(op_name(kind)) + ": input from another tape");
    const TapeNode& n = node(v.id());
    values.push_back(&n.value);
    ids.push_back(v.id());
    requires_grad = requires_grad || n.requires_grad;
  }
  Tensor out = evaluate(kind, values, attrs);
  nodes_.push_back(TapeNode{kind, std::move(ids), std::move(out), attrs, requires_grad});
  return Var(this, nodes_.size() - 1);
}

const TapeNode& Tape::node(std::size_t id) const {
  if (id >= nodes_.size()) throw std::out_of_range("tape: node " + std::to_string(id) + " not on tape");
  return nodes_[id];
}

void Tape::truncate(std::size_t size) {
  if (size < nodes_.size()) nodes_.resize(size);
}

Var matmul(Var a, Var b) { return binary(OpKind::matmul, a, b); }
Var matmul_nt(Var a, Var b) { return binary(OpKind::matmul_nt, a, b); }
Var matmul_tn(Var a, Var b) { return binary(OpKind::matmul_tn, a, b); }
Var transpose(Var x) { return unary(OpKind::transpose, x); }
Var add(Var a, Var b) { return binary(OpKind::add, a, b); }
Var sub(Var a, Var b) { return binary(OpKind::sub, a, b); }
Var mul(Var a, Var b) { return binary(OpKind::elementwise_mul, a, b); }
Var scale(Var x, double a, double b) { return unary(OpKind::scale, x, {.a = a, .b = b}); }

Var leaky_relu(Var x, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("leaky_relu: slope must lie in (0, 1), got " + std::to_string(alpha));
  }
  return unary(OpKind::leaky_relu, x, {.a = alpha});
}

Var relu(Var x) { return unary(OpKind::leaky_relu, x, {.a = 0.0}); }
Var sigmoid(Var x) { return unary(OpKind::sigmoid, x); }
Var tanh(Var x) { return unary(OpKind::tanh, x); }
Var square(Var x) { return unary(OpKind::square, x); }
Var sqrt(Var x) { return unary(OpKind::sqrt, x); }
Var reciprocal(Var x) { return unary(OpKind::reciprocal, x); }
Var exp(Var x) { return unary(OpKind::exp, x); }
Var log(Var x) { return unary(OpKind::log, x); }
Var softplus(Var x) { return unary(OpKind::softplus, x); }
Var sum(Var x) { return unary(OpKind::sum, x); }
Var mean(Var x) { return unary(OpKind::mean, x); }
Var sum_axis0(Var x) { return unary(OpKind::sum_axis0, x); }
Var sum_axis1(Var x) { return unary(OpKind::sum_axis1, x); }
Var broadcast_scalar(Var x, const Shape& shape) { return unary(OpKind::broadcast_scalar, x, {.shape = shape}); }
Var broadcast_rows(Var x, std::size_t rows) { return unary(OpKind::broadcast_rows, x, {.extent = rows}); }
Var broadcast_cols(Var x, std::size_t cols) { return unary(OpKind::broadcast_cols, x, {.extent = cols}); }
Var l2_norm(Var x) { return unary(OpKind::l2_norm, x); }
Var concat(Var a, Var b) { return binary(OpKind::concat, a, b); }

Var slice_cols(Var x, std::size_t offset, std::size_t width) {
  return unary(OpKind::slice_cols, x, {.offset = offset, .extent = width});
}

Var pad_cols(Var x, std::size_t offset, std::size_t total) {
  return unary(OpKind::pad_cols, x, {.offset = offset, .extent = total});
}

Var broadcast_add_bias(Var x, Var bias) { return binary(OpKind::broadcast_add_bias, x, bias); }
Var logsumexp_rows(Var x) { return unary(OpKind::logsumexp_rows, x); }
Var reshape(Var x, const Shape& shape) { return unary(OpKind::reshape, x, {.shape = shape}); }

Var clamp(Var x, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: empty range");
  return unary(OpKind::clamp, x, {.a = lo, .b = hi});
}

Var bce_with_logits(Var logits, Var targets) {
  if (logits.shape() != targets.shape()) {
    throw std::invalid_argument("bce_with_logits: logits " + shape_str(logits.shape()) + " vs targets " +
                                shape_str(targets.shape()));
  }
  for (double t : targets.value().data()) {
    if (t < 0.0 || t > 1.0) throw std::invalid_argument("bce_with_logits: target outside [0, 1]");
  }
  return mean(sub(softplus(logits), mul(targets, logits)));
}

Tensor bce_with_logits(const Tensor& logits, const Tensor& targets) {
  Tape tape;
  return bce_with_logits(tape.constant(logits), tape.constant(targets)).value();
}

const Tensor& GradientMap::operator[](Var leaf) const {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] == leaf.id()) return values_[i];
  }
  throw std::out_of_range("gradient map: leaf " + std::to_string(leaf.id()) + " was not requested");
}

Var GradientMap::node(Var leaf) const {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] == leaf.id()) {
      if (!nodes_[i].valid()) throw std::logic_error("gradient map: backward ran without create_graph");
      return nodes_[i];
    }
  }
  throw std::out_of_range("gradient map: leaf " + std::to_string(leaf.id()) + " was not requested");
}

bool GradientMap::contains(Var leaf) const {
  return std::find(ids_.begin(), ids_.end(), leaf.id()) != ids_.end();
}

GradientMap backward(Var output, const std::vector<Var>& leaves, bool create_graph) {
  Tape& tape = output.tape();
  if (output.value().size() != 1) {
    throw std::invalid_argument("backward: output must be scalar, got shape " + shape_str(output.shape()));
  }
  const std::size_t n = output.id() + 1;
  std::vector<bool> wanted(n, false);
  for (const Var& l : leaves) {
    if (&l.tape() != &tape || l.id() >= tape.size()) {
      throw std::invalid_argument("backward: requested leaf is not on the output's tape");
    }
    if (l.id() < n) wanted[l.id()] = true;
  }

  // leads[i]: node i depends on at least one requested leaf.
  std::vector<bool> leads(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (wanted[i]) {
      leads[i] = true;
      continue;
    }
    for (std::size_t in : tape.node(i).inputs) {
      if (leads[in]) {
        leads[i] = true;
        break;
      }
    }
  }

  const std::size_t mark = tape.size();
  std::vector<std::optional<Var>> grads(n);
  if (leads[output.id()]) grads[output.id()] = tape.constant(Tensor::full(output.shape(), 1.0));

  for (std::size_t k = n; k-- > 0;) {
    if (!grads[k]) continue;
    const TapeNode& node = tape.node(k);
    if (node.inputs.empty()) continue;
    std::vector<bool> need(node.inputs.size());
    bool any = false;
    for (std::size_t i = 0; i < node.inputs.size(); ++i) {
      need[i] = leads[node.inputs[i]];
      any = any || need[i];
    }
    if (!any) continue;
    const std::vector<std::size_t> inputs = node.inputs;
    auto contributions = vjp(tape, k, *grads[k], need);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (!contributions[i]) continue;
      auto& slot = grads[inputs[i]];
      slot = slot ? add(*slot, *contributions[i]) : *contributions[i];
    }
  }

  GradientMap map;
  for (const Var& l : leaves) {
    if (std::find(map.ids_.begin(), map.ids_.end(), l.id()) != map.ids_.end()) continue;
    map.ids_.push_back(l.id());
    const bool has = l.id() < n && grads[l.id()].has_value();
    if (has) {
      map.values_.push_back(grads[l.id()]->value());
      map.nodes_.push_back(create_graph ? *grads[l.id()] : Var());
    } else {
      map.values_.push_back(Tensor::zeros(l.shape()));
      map.nodes_.push_back(create_graph ? tape.constant(Tensor::zeros(l.shape())) : Var());
    }
  }
  if (!create_graph) tape.truncate(mark);
  return map;
}

Var grad_wrt_input(Var output, Var input) { return backward(output, {input}, true).node(input); }

double finite_diff_check(const ScalarFn& f, const Tensor& x, double eps) {
  if (!(eps > 0)) throw std::invalid_argument("finite_diff_check: eps must be positive");
  Tensor analytic;
  {
    Tape tape;
    Var leaf = tape.leaf(x);
    analytic = backward(f(leaf), {leaf})[leaf];
  }
  auto eval_at = [&](std::vector<double> v) {
    Tape tape;
    return f(tape.leaf(Tensor::computed(x.shape(), std::move(v)))).value().item();
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> plus = x.to_vector();
    std::vector<double> minus = x.to_vector();
    plus[i] += eps;
    minus[i] -= eps;
    const double numeric = (eval_at(std::move(plus)) - eval_at(std::move(minus))) / (2 * eps);
    const double a = analytic[i];
    const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace lsgan::ad
