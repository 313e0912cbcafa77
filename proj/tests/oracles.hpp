// Shared gradient oracles for the unit tests and the acceptance binary.

#pragma once

#include <functional>
#include <random>
#include <vector>

#include "lsgan/autodiff.hpp"
#include "lsgan/nets.hpp"
#include "lsgan/training.hpp"

namespace lsgan::oracles {

using namespace lsgan::ad;

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = u(rng);
  return Tensor(std::move(shape), std::move(v));
}

// Projects an arbitrary-shaped result to a scalar with fixed random weights so
// every output entry contributes a distinct sensitivity.
inline Var contract(Var y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Var w = y.tape().constant(random_tensor(y.shape(), rng));
  return sum(mul(y, w));
}

struct GradCase {
  const char* name;
  OpKind kind;
  Shape shape;
  bool positive;
  std::function<Var(Var)> op;
};

/// At least one case per primitive.
inline std::vector<GradCase> gradient_cases() {
  return {
      {"matmul_left", OpKind::matmul, {3, 4}, false, [](Var x) {
         std::mt19937_64 r(7);
         return matmul(x, x.tape().constant(random_tensor({4, 2}, r)));
       }},
      {"matmul_right", OpKind::matmul, {4, 2}, false, [](Var x) {
         std::mt19937_64 r(8);
         return matmul(x.tape().constant(random_tensor({3, 4}, r)), x);
       }},
      {"matmul_self", OpKind::matmul, {3, 3}, false, [](Var x) { return matmul(x, x); }},
      {"matmul_nt_left", OpKind::matmul_nt, {3, 4}, false, [](Var x) {
         std::mt19937_64 r(9);
         return matmul_nt(x, x.tape().constant(random_tensor({2, 4}, r)));
       }},
      {"matmul_nt_right", OpKind::matmul_nt, {2, 4}, false, [](Var x) {
         std::mt19937_64 r(10);
         return matmul_nt(x.tape().constant(random_tensor({3, 4}, r)), x);
       }},
      {"matmul_nt_self", OpKind::matmul_nt, {3, 3}, false, [](Var x) { return matmul_nt(x, x); }},
      {"matmul_tn_left", OpKind::matmul_tn, {4, 3}, false, [](Var x) {
         std::mt19937_64 r(11);
         return matmul_tn(x, x.tape().constant(random_tensor({4, 2}, r)));
       }},
      {"matmul_tn_right", OpKind::matmul_tn, {4, 2}, false, [](Var x) {
         std::mt19937_64 r(12);
         return matmul_tn(x.tape().constant(random_tensor({4, 3}, r)), x);
       }},
      {"matmul_tn_self", OpKind::matmul_tn, {3, 3}, false, [](Var x) { return matmul_tn(x, x); }},
      {"transpose", OpKind::transpose, {2, 5}, false, [](Var x) { return transpose(x); }},
      {"add", OpKind::add, {3, 2}, false, [](Var x) { return add(x, square(x)); }},
      {"sub", OpKind::sub, {3, 2}, false, [](Var x) { return sub(square(x), x); }},
      {"mul", OpKind::elementwise_mul, {3, 2}, false, [](Var x) { return mul(x, tanh(x)); }},
      {"scale", OpKind::scale, {4}, false, [](Var x) { return scale(x, -2.5, 0.3); }},
      {"leaky_relu", OpKind::leaky_relu, {3, 3}, false, [](Var x) { return leaky_relu(x, 0.2); }},
      {"sigmoid", OpKind::sigmoid, {3, 3}, false, [](Var x) { return sigmoid(scale(x, 3.0)); }},
      {"tanh", OpKind::tanh, {3, 3}, false, [](Var x) { return tanh(x); }},
      {"square", OpKind::square, {5}, false, [](Var x) { return square(x); }},
      {"sqrt", OpKind::sqrt, {5}, true, [](Var x) { return sqrt(x); }},
      {"reciprocal", OpKind::reciprocal, {5}, true, [](Var x) { return reciprocal(x); }},
      {"exp", OpKind::exp, {5}, false, [](Var x) { return exp(x); }},
      {"log", OpKind::log, {5}, true, [](Var x) { return log(x); }},
      {"softplus", OpKind::softplus, {5}, false, [](Var x) { return softplus(scale(x, 4.0)); }},
      {"sum", OpKind::sum, {2, 3}, false, [](Var x) { return scale(sum(square(x)), 1.0); }},
      {"mean", OpKind::mean, {2, 3}, false, [](Var x) { return mean(mul(x, x)); }},
      {"sum_axis0", OpKind::sum_axis0, {4, 3}, false, [](Var x) { return sum_axis0(square(x)); }},
      {"sum_axis1", OpKind::sum_axis1, {4, 3}, false, [](Var x) { return sum_axis1(square(x)); }},
      {"broadcast_scalar", OpKind::broadcast_scalar, {1}, false, [](Var x) { return broadcast_scalar(square(x), {2, 3}); }},
      {"broadcast_rows", OpKind::broadcast_rows, {3}, false, [](Var x) { return broadcast_rows(square(x), 4); }},
      {"broadcast_cols", OpKind::broadcast_cols, {3, 1}, false, [](Var x) { return broadcast_cols(square(x), 4); }},
      {"l2_norm", OpKind::l2_norm, {2, 3}, false, [](Var x) { return l2_norm(x); }},
      {"concat", OpKind::concat, {2, 3}, false, [](Var x) { return concat(x, square(x)); }},
      {"slice_cols", OpKind::slice_cols, {2, 5}, false, [](Var x) { return slice_cols(square(x), 1, 3); }},
      {"pad_cols", OpKind::pad_cols, {2, 3}, false, [](Var x) { return pad_cols(square(x), 2, 7); }},
      {"broadcast_add_bias_x", OpKind::broadcast_add_bias, {3, 4}, false, [](Var x) {
         std::mt19937_64 r(9);
         return broadcast_add_bias(square(x), x.tape().constant(random_tensor({4}, r)));
       }},
      {"broadcast_add_bias_b", OpKind::broadcast_add_bias, {4}, false, [](Var b) {
         std::mt19937_64 r(10);
         return broadcast_add_bias(b.tape().constant(random_tensor({3, 4}, r)), square(b));
       }},
      {"logsumexp_rows", OpKind::logsumexp_rows, {3, 4}, false, [](Var x) { return logsumexp_rows(scale(x, 2.0)); }},
      {"clamp", OpKind::clamp, {2, 3}, false, [](Var x) { return clamp(scale(x, 3.0), -1.0, 1.0); }},
      {"reshape", OpKind::reshape, {2, 3}, false, [](Var x) { return reshape(square(x), {3, 2}); }},
  };
}

struct GradResult {
  double first_order = 0.0;
  double second_order = 0.0;
};

/// Central-difference relative errors for the gradient and for the gradient
/// of the squared gradient norm.
inline GradResult check_case(const GradCase& c, std::size_t index, std::mt19937_64& rng) {
  const Tensor x = c.positive ? random_tensor(c.shape, rng, 0.5, 2.0) : random_tensor(c.shape, rng);
  const auto op = c.op;
  const std::uint64_t seed = 100 + index;
  GradResult r;
  r.first_order = finite_diff_check([op, seed](Var v) { return contract(op(v), seed); }, x, 1e-5);
  auto grad_norm = [op, seed](Var v) {
    Var g = grad_wrt_input(contract(op(v), seed), v);
    return sum(square(g));
  };
  r.second_order = finite_diff_check(grad_norm, x, 1e-5);
  return r;
}

/// Relative error of each WGAN-GP critic parameter gradient on a seeded
/// two-layer critic.
inline std::vector<double> gradient_penalty_errors() {
  const std::size_t latent = 4, cond = 3;
  nets::MlpSpec spec{{latent + cond, 6, 1}};
  const auto net = nets::init_params(spec, 11);
  std::mt19937_64 rng(12);
  const Tensor real = nets::standard_normal({5, latent}, rng);
  const Tensor fake = nets::standard_normal({5, latent}, rng);
  const Tensor c = nets::standard_normal({5, cond}, rng);
  const Tensor eps = Tensor::vector({0.2, 0.7, 0.45, 0.9, 0.05});
  std::vector<Tensor> biased = net.params;
  biased[1] = nets::standard_normal({6}, rng);
  biased[3] = Tensor::vector({0.3});

  std::vector<double> errors;
  for (std::size_t which = 0; which < biased.size(); ++which) {
    auto f = [&](Var p) {
      auto& t = p.tape();
      nets::BoundNetwork bn{&spec, {}};
      for (std::size_t i = 0; i < biased.size(); ++i) bn.params.push_back(i == which ? p : t.constant(biased[i]));
      return train::wgan_gp_critic_loss(bn, real, fake, t.constant(c), 10.0, eps).loss;
    };
    errors.push_back(finite_diff_check(f, biased[which], 1e-6));
  }
  return errors;
}

}  // namespace lsgan::oracles
