#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <tuple>

#include "doctest.h"
#include "lsgan/autodiff.hpp"
#include "oracles.hpp"

using namespace lsgan;
using namespace lsgan::ad;

using oracles::random_tensor;

TEST_CASE("primitive forward examples") {
  Tape t;
  Var a = t.constant(Tensor::matrix({{1, 2}, {3, 4}}));
  Var b = t.constant(Tensor::matrix({{1}, {1}}));
  CHECK(matmul(a, b).value() == Tensor::matrix({{3}, {7}}));
  CHECK(matmul_nt(a, a).value() == Tensor::matrix({{5, 11}, {11, 25}}));
  CHECK(matmul_tn(a, a).value() == Tensor::matrix({{10, 14}, {14, 20}}));
  CHECK(mean(t.constant(Tensor::vector({2, 4, 6}))).value().item() == 4.0);
  CHECK(l2_norm(t.constant(Tensor::vector({3, 4}))).value().item() == 5.0);
}

TEST_CASE("leaky_relu examples") {
  Tape t;
  CHECK(leaky_relu(t.constant(Tensor::scalar(2.0)), 0.2).value().item() == 2.0);
  CHECK(leaky_relu(t.constant(Tensor::scalar(-1.0)), 0.2).value().item() == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(leaky_relu(t.constant(Tensor::scalar(0.0)), 0.2).value().item() == 0.0);
  CHECK_THROWS_AS(leaky_relu(t.constant(Tensor::scalar(1.0)), 1.5), std::invalid_argument);

  // Slope at exactly zero takes the positive branch.
  Var x0 = t.leaf(Tensor::scalar(0.0));
  CHECK(backward(leaky_relu(x0, 0.2), {x0})[x0].item() == 1.0);
}

TEST_CASE("bce_with_logits examples") {
  const double ln2 = std::log(2.0);
  CHECK(std::abs(bce_with_logits(Tensor::vector({0}), Tensor::vector({0.5})).item() - ln2) < 1e-12);
  CHECK(std::abs(bce_with_logits(Tensor::vector({0}), Tensor::vector({1})).item() - ln2) < 1e-12);
  const double direct = std::log1p(std::exp(-10.0));
  CHECK(std::abs(bce_with_logits(Tensor::vector({10}), Tensor::vector({1})).item() - direct) < 1e-15);
  CHECK(std::abs(direct - 4.5398899216870535e-05) < 1e-15);
  // Saturated logits stay finite.
  CHECK(std::isfinite(bce_with_logits(Tensor::vector({-800}), Tensor::vector({1})).item()));
  CHECK_THROWS_AS(bce_with_logits(Tensor::vector({0}), Tensor::vector({1.5})), std::invalid_argument);
}

TEST_CASE("backward examples") {
  SUBCASE("square") {
    Tape t;
    Var x = t.leaf(Tensor::scalar(3.0));
    CHECK(backward(square(x), {x})[x].item() == 6.0);
  }
  SUBCASE("leaky slope on negatives") {
    Tape t;
    Var x = t.leaf(Tensor::scalar(-5.0));
    CHECK(backward(leaky_relu(x, 0.2), {x})[x].item() == doctest::Approx(0.2).epsilon(1e-15));
  }
  SUBCASE("double backprop through the input gradient") {
    // d/dw ||d(w x)/dx||^2 = d/dw w^2 = 2w.
    Tape t;
    Var w = t.leaf(Tensor::scalar(3.0));
    Var x = t.leaf(Tensor::scalar(0.7));
    Var gx = grad_wrt_input(sum(mul(w, x)), x);
    CHECK(gx.value().item() == 3.0);
    Var penalty = sum(square(gx));
    CHECK(backward(penalty, {w})[w].item() == 6.0);
  }
}

TEST_CASE("grad_wrt_input examples") {
  Tape t;
  Var x = t.leaf(Tensor::vector({0.5, -1.0, 2.0}));
  CHECK(grad_wrt_input(sum(x), x).value() == Tensor::vector({1, 1, 1}));

  Var x2 = t.leaf(Tensor::vector({1, 2}));
  CHECK(grad_wrt_input(sum(square(x2)), x2).value() == Tensor::vector({2, 4}));

  Var w = t.leaf(Tensor::scalar(0.0));
  Var x3 = t.leaf(Tensor::scalar(1.0));
  CHECK(grad_wrt_input(sigmoid(mul(w, x3)), x3).value().item() == 0.0);
}

TEST_CASE("finite_diff_check examples") {
  CHECK(finite_diff_check([](Var x) { return sum(square(x)); }, Tensor::vector({1, 2, 3}), 1e-5) < 1e-7);
  CHECK(finite_diff_check([](Var x) { return sum(scale(x, 0.0, 4.0)); }, Tensor::vector({1, 2}), 1e-5) == 0.0);
  auto bce = [](Var l) { return bce_with_logits(l, l.tape().constant(Tensor::vector({0.5, 0.5}))); };
  CHECK(finite_diff_check(bce, Tensor::vector({0.3, -0.7}), 1e-5) < 1e-6);
}

TEST_CASE("error paths") {
  Tape t;
  Var a = t.constant(Tensor::zeros({2, 3}));
  Var b = t.constant(Tensor::zeros({2, 3}));
  try {
    matmul(a, b);
    FAIL("expected shape error");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
  CHECK_THROWS_AS(add(a, t.constant(Tensor::zeros({3, 2}))), std::invalid_argument);
  CHECK_THROWS_AS(sqrt(t.constant(Tensor::vector({1, -1}))), std::domain_error);

  Var x = t.leaf(Tensor::vector({1, 2}));
  CHECK_THROWS_AS(backward(square(x), {x}), std::invalid_argument);

  Tape other;
  Var y = other.leaf(Tensor::scalar(1));
  CHECK_THROWS_AS(backward(sum(x), {y}), std::invalid_argument);
  CHECK_THROWS_AS(add(x, y), std::invalid_argument);

  CHECK_THROWS_AS(Tensor({2}, {1.0, std::nan("")}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("every primitive passes central differences") {
  std::mt19937_64 rng(1234);
  const auto cases = oracles::gradient_cases();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    CAPTURE(cases[i].name);
    const auto r = oracles::check_case(cases[i], i, rng);
    CHECK(r.first_order < 1e-5);
    CHECK(r.second_order < 1e-5);
  }
}

TEST_CASE("every primitive has a gradient case") {
  const auto cases = oracles::gradient_cases();
  for (int k = static_cast<int>(OpKind::matmul); k <= static_cast<int>(OpKind::clamp); ++k) {
    const auto kind = static_cast<OpKind>(k);
    CAPTURE(op_name(kind));
    CHECK(std::any_of(cases.begin(), cases.end(), [&](const auto& c) { return c.kind == kind; }));
  }
}

TEST_CASE("linearity of backward") {
  std::mt19937_64 rng(99);
  const Tensor x0 = random_tensor({3, 2}, rng);
  const double a = 1.7, b = -0.4;
  auto f = [](Var x) { return sum(tanh(matmul(x, transpose(x)))); };
  auto g = [](Var x) { return mean(softplus(x)); };

  Tape t;
  Var x = t.leaf(x0);
  const Tensor combined = backward(add(scale(f(x), a), scale(g(x), b)), {x})[x];
  const Tensor gf = backward(f(x), {x})[x];
  const Tensor gg = backward(g(x), {x})[x];
  for (std::size_t i = 0; i < combined.size(); ++i) {
    CHECK(combined[i] == doctest::Approx(a * gf[i] + b * gg[i]).epsilon(1e-14));
  }
}

TEST_CASE("tape determinism") {
  auto run = [] {
    std::mt19937_64 rng(5);
    Tape t;
    Var x = t.leaf(random_tensor({4, 3}, rng));
    Var w = t.leaf(random_tensor({3, 2}, rng));
    Var y = mean(square(leaky_relu(matmul(x, w), 0.2)));
    auto grads = backward(y, {x, w});
    return std::make_tuple(y.value(), grads[x], grads[w]);
  };
  CHECK(run() == run());
}

TEST_CASE("backward without create_graph leaves the tape unchanged") {
  Tape t;
  Var x = t.leaf(Tensor::vector({1, 2, 3}));
  Var y = sum(exp(x));
  const std::size_t before = t.size();
  auto g = backward(y, {x});
  CHECK(t.size() == before);
  CHECK(g[x][2] == doctest::Approx(std::exp(3.0)));
  CHECK_THROWS(g.node(x));
}

TEST_CASE("unreached leaves get zero gradients") {
  Tape t;
  Var x = t.leaf(Tensor::vector({1, 2}));
  Var unused = t.leaf(Tensor::vector({5, 6, 7}));
  auto g = backward(sum(x), {x, unused});
  CHECK(g[unused] == Tensor::zeros({3}));
}
