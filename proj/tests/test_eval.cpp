#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "lsgan/eval.hpp"

using namespace lsgan;
using namespace lsgan::eval;

namespace {

Tensor gaussian(std::size_t n, std::size_t d, std::mt19937_64& rng, double sd = 1.0, double shift = 0.0) {
  std::normal_distribution<double> nd(shift, sd);
  std::vector<double> v(n * d);
  for (auto& x : v) x = nd(rng);
  return Tensor({n, d}, v);
}

Tensor map_rows(const Tensor& x, const std::function<void(std::span<double>)>& f) {
  std::vector<double> v = x.values();
  for (std::size_t r = 0; r < x.rows(); ++r) f(std::span<double>(v.data() + r * x.cols(), x.cols()));
  return Tensor(x.shape(), v);
}

GaussianStats diag(std::vector<double> mean, std::vector<double> var) {
  const std::size_t d = mean.size();
  std::vector<double> cov(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) cov[i * d + i] = var[i];
  return {Tensor::vector(mean), Tensor({d, d}, cov)};
}

}  // namespace

TEST_CASE("fit_gaussian") {
  const auto s = fit_gaussian(Tensor::matrix({{1, 2}, {3, 6}, {5, 10}}));
  CHECK(s.mean[0] == doctest::Approx(3.0));
  CHECK(s.mean[1] == doctest::Approx(6.0));
  CHECK(s.covariance.at(0, 0) == doctest::Approx(4.0));
  CHECK(s.covariance.at(0, 1) == doctest::Approx(8.0));
  CHECK(s.covariance.at(1, 1) == doctest::Approx(16.0));

  const auto two = fit_gaussian(Tensor::matrix({{0, 0}, {2, 0}}));
  CHECK(two.mean == Tensor::vector({1, 0}));
  CHECK(two.covariance == Tensor::matrix({{2, 0}, {0, 0}}));
  CHECK(fit_gaussian(Tensor::full({5, 3}, 1.5)).covariance == Tensor::zeros({3, 3}));

  std::mt19937_64 rng(1);
  const auto big = fit_gaussian(gaussian(100000, 4, rng));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::abs(big.mean[i]) < 0.02);
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(std::abs(big.covariance.at(i, j) - (i == j ? 1.0 : 0.0)) < 0.03);
      CHECK(big.covariance.at(i, j) == big.covariance.at(j, i));
    }
  }
  CHECK_THROWS_AS(fit_gaussian(Tensor::matrix({{1, 2}})), std::invalid_argument);
}

TEST_CASE("frechet distance examples") {
  // 1-D: (0-3)^2 + 1 + 1 - 2 = 9
  CHECK(frechet_distance(diag({0}, {1}), diag({3}, {1})) == doctest::Approx(9.0).epsilon(1e-12));
  // Equal means, variances 1 and 9 per axis: 2 * (1 + 9 - 2*3) = 8; variance 1 vs 4 in 2-D: 2 * (1 + 4 - 4) = 2
  CHECK(frechet_distance(diag({0, 0}, {1, 1}), diag({0, 0}, {4, 4})) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(frechet_distance(diag({1, 1}, {1, 1}), diag({1, 1}, {9, 9})) == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(frechet_distance(diag({0, 0}, {1, 1}), diag({2, 0}, {1, 1})) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK_THROWS_AS(frechet_distance(diag({0}, {1}), diag({0, 0}, {1, 1})), std::invalid_argument);
}

TEST_CASE("frechet distance matches the diagonal closed form") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0), pos(0.01, 4.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + trial % 6;
    std::vector<double> m1(d), m2(d), v1(d), v2(d);
    double oracle = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      m1[i] = u(rng), m2[i] = u(rng), v1[i] = pos(rng), v2[i] = pos(rng);
      oracle += (m1[i] - m2[i]) * (m1[i] - m2[i]) + std::pow(std::sqrt(v1[i]) - std::sqrt(v2[i]), 2);
    }
    CHECK(std::abs(frechet_distance(diag(m1, v1), diag(m2, v2)) - oracle) < 1e-8);
  }
}

TEST_CASE("fid properties") {
  std::mt19937_64 rng(3);
  const Tensor a = gaussian(300, 5, rng);
  const Tensor b = gaussian(300, 5, rng, 1.5, 0.3);
  CHECK(fid(a, a) < 1e-8);
  CHECK(fid(a, b) == doctest::Approx(fid(b, a)).epsilon(1e-8));
  CHECK(fid(a, b) > 0.0);
  // Rotation and translation of both sets leave the distance unchanged.
  const double c = std::cos(0.7), s = std::sin(0.7);
  const auto rot = [&](std::span<double> r) {
    const double x = r[0], y = r[1];
    r[0] = c * x - s * y + 5.0;
    r[1] = s * x + c * y - 2.0;
  };
  CHECK(fid(map_rows(a, rot), map_rows(b, rot)) == doctest::Approx(fid(a, b)).epsilon(1e-8));
  // Rank-deficient covariances stay finite and non-negative.
  const Tensor flat = map_rows(a, [](std::span<double> r) { r[4] = r[3]; });
  CHECK(fid(flat, flat) >= 0.0);
  CHECK(fid(flat, flat) < 1e-6);
}

TEST_CASE("diversity and multimodality") {
  std::mt19937_64 rng(11);
  // Expected distance between two standard 2-D Gaussians: sqrt(pi).
  const Tensor x = gaussian(5000, 2, rng);
  std::mt19937_64 r1(5);
  CHECK(std::abs(diversity(x, 20000, r1) - std::sqrt(std::numbers::pi)) < 0.05);

  std::mt19937_64 r2(9), r3(9);
  const double base = diversity(x, 500, r2);
  CHECK(diversity(map_rows(x, [](std::span<double> r) {
          for (auto& v : r) v = 3.0 * v + 10.0;
        }),
                  500, r3) == doctest::Approx(3.0 * base).epsilon(1e-12));

  const Tensor same = Tensor::full({4, 3}, 2.0);
  CHECK(diversity(same, 10, rng) == 0.0);
  CHECK(diversity(Tensor::matrix({{0, 0}, {3, 4}}), 7, rng) == doctest::Approx(5.0));
  CHECK_THROWS_AS(diversity(Tensor::matrix({{1, 2}}), 10, rng), std::invalid_argument);
  CHECK_THROWS_AS(diversity(x, 0, rng), std::invalid_argument);

  const std::vector<Tensor> groups = {Tensor::matrix({{0, 0}, {3, 4}}), Tensor::matrix({{1, 1}, {1, 2}})};
  CHECK(multimodality(groups, 5, rng) == doctest::Approx(3.0));
  CHECK_THROWS_AS(multimodality({Tensor::matrix({{1, 1}})}, 5, rng), std::invalid_argument);
  CHECK_THROWS_AS(multimodality({}, 5, rng), std::invalid_argument);
}

TEST_CASE("r_precision") {
  std::mt19937_64 rng(21);
  const std::size_t n = 2000;
  SUBCASE("independent embeddings sit at chance") {
    const Tensor m = gaussian(n, 8, rng), c = gaussian(n, 8, rng);
    const auto r = r_precision(m, c, 32, rng);
    CHECK(std::abs(r[0] - 1.0 / 32) < 0.02);
    CHECK(std::abs(r[1] - 2.0 / 32) < 0.02);
    CHECK(std::abs(r[2] - 3.0 / 32) < 0.02);
  }
  SUBCASE("perfect alignment ranks first") {
    const Tensor c = gaussian(200, 8, rng);
    const auto r = r_precision(c, c, 32, rng);
    CHECK(r[0] == 1.0);
    CHECK(r[2] == 1.0);
  }
  SUBCASE("isometry invariance and nesting") {
    const Tensor c = gaussian(300, 4, rng);
    const Tensor m = map_rows(c, [&](std::span<double> row) {
      std::normal_distribution<double> nd(0.0, 0.8);
      for (auto& v : row) v += nd(rng);
    });
    const auto shift = [](std::span<double> row) {
      std::swap(row[0], row[3]);
      row[1] = -row[1] + 4.0;
    };
    std::mt19937_64 ra(4), rb(4);
    const auto r = r_precision(m, c, 32, ra);
    const auto rt = r_precision(map_rows(m, shift), map_rows(c, shift), 32, rb);
    for (std::size_t k = 0; k < 3; ++k) CHECK(r[k] == rt[k]);
    CHECK(r[0] <= r[1]);
    CHECK(r[1] <= r[2]);
    CHECK(r[0] > 3.0 / 32);
  }
  SUBCASE("mismatches come from other conditions") {
    // Two conditions only: every pool member besides the truth shares the
    // other condition value, so an anchor equal to its condition always wins.
    std::vector<double> cv, mv;
    for (std::size_t i = 0; i < 64; ++i) {
      const double v = i % 2 ? 1.0 : -1.0;
      cv.insert(cv.end(), {v, 0.0});
      mv.insert(mv.end(), {v, 0.0});
    }
    const auto r = r_precision(Tensor({64, 2}, mv), Tensor({64, 2}, cv), 8, rng);
    CHECK(r[0] == 1.0);
    const Tensor few = Tensor::matrix({{1, 0}, {1, 0}, {2, 0}});
    CHECK_THROWS_AS(r_precision(few, few, 3, rng), std::invalid_argument);
  }
  CHECK_THROWS_AS(r_precision(gaussian(10, 3, rng), gaussian(10, 3, rng), 32, rng), std::invalid_argument);
  CHECK_THROWS_AS(r_precision(gaussian(40, 3, rng), gaussian(40, 2, rng), 32, rng), std::invalid_argument);
}

TEST_CASE("mm_dist") {
  CHECK(mm_dist(Tensor::matrix({{0, 0}, {1, 1}}), Tensor::matrix({{3, 4}, {1, 1}})) == doctest::Approx(2.5));
  CHECK(mm_dist(Tensor::matrix({{0, 0}, {1, 1}}), Tensor::matrix({{0, 0}, {1, 1}})) == 0.0);
  CHECK(mm_dist(Tensor::matrix({{0, 0}, {1, 1}}), Tensor::matrix({{0, 1}, {1, 0}})) == doctest::Approx(1.0));
  CHECK_THROWS_AS(mm_dist(Tensor::matrix({{0, 0}}), Tensor::matrix({{0, 0, 0}})), std::invalid_argument);
}


namespace {

// Static pose with optional root oscillation along x and a rigid offset.
data::MotionSequence pose(std::size_t frames, double amp, data::Vec3 offset = {0, 0, 0}) {
  auto m = data::MotionSequence::blank(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const double osc = amp * std::sin(0.3 * static_cast<double>(t));
    for (std::size_t j = 0; j < data::kJoints; ++j) {
      const double jj = static_cast<double>(j);
      m.set(t, j, {0.1 * jj + osc + offset[0], 0.2 * jj + 0.9 + offset[1], -0.05 * jj + offset[2]});
    }
  }
  return m;
}

double unbiased_variance(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_CASE("ape_ave identities") {
  const auto ref = pose(50, 0.0);
  for (double v : ape_ave(ref, ref).values()) CHECK(v == 0.0);

  SUBCASE("rigid translation") {
    const auto moved = pose(50, 0.0, {0.3, -0.4, 1.2});
    const auto r = ape_ave(moved, ref);
    CHECK(std::abs(r.ape_root - std::sqrt(0.09 + 0.16 + 1.44)) < 1e-10);
    CHECK(std::abs(r.ape_traj - std::sqrt(0.09 + 1.44)) < 1e-10);
    CHECK(std::abs(r.ape_mean_pose) < 1e-10);
    CHECK(std::abs(r.ape_mean_joints - std::sqrt(0.09 + 0.16 + 1.44)) < 1e-10);
    CHECK(std::abs(r.ave_root) < 1e-10);
    CHECK(std::abs(r.ave_traj) < 1e-10);
    CHECK(std::abs(r.ave_mean_pose) < 1e-10);
    CHECK(std::abs(r.ave_mean_joints) < 1e-10);
  }
  SUBCASE("rigid oscillation shows up in the absolute blocks only") {
    const auto swaying = pose(50, 0.25);
    std::vector<double> osc;
    double ape = 0.0;
    for (std::size_t t = 0; t < 50; ++t) {
      osc.push_back(0.25 * std::sin(0.3 * static_cast<double>(t)));
      ape += std::abs(osc.back());
    }
    ape /= 50.0;
    const double var = unbiased_variance(osc);
    const auto r = ape_ave(swaying, ref);
    CHECK(std::abs(r.ave_root - var) < 1e-10);
    CHECK(std::abs(r.ave_traj - var) < 1e-10);
    CHECK(std::abs(r.ave_mean_joints - var) < 1e-10);
    CHECK(std::abs(r.ave_mean_pose) < 1e-10);
    CHECK(std::abs(r.ape_root - ape) < 1e-10);
    CHECK(std::abs(r.ape_mean_joints - ape) < 1e-10);
    CHECK(std::abs(r.ape_mean_pose) < 1e-10);
  }
  SUBCASE("symmetric") {
    const auto a = pose(50, 0.4, {0.1, 0, 0});
    const auto ra = ape_ave(a, ref).values(), rb = ape_ave(ref, a).values();
    for (std::size_t i = 0; i < 8; ++i) CHECK(ra[i] == doctest::Approx(rb[i]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(ape_ave(pose(40, 0.0), ref), std::invalid_argument);
  auto broken = ref;
  broken.positions.pop_back();
  CHECK_THROWS_AS(ape_ave(broken, ref), std::invalid_argument);
  CHECK(std::string(ApeAve::names()[4]) == "AVE_root");
}

TEST_CASE("flop counts") {
  LayerOp fc{LayerKind::linear, 100, 256, "fc"};
  CHECK(count_flops(std::vector<LayerOp>{fc}, 1).total == 51456.0);
  CHECK(count_flops(std::vector<LayerOp>{fc}, 1, true).total == 25856.0);

  nets::MlpSpec s;
  s.widths = {4, 3, 2};
  CHECK(count_flops(s, 1).total == 44.0);
  CHECK(count_flops(s, 1, true).total == 26.0);
  s.final_activation = nets::FinalActivation::sigmoid;
  CHECK(count_flops(s, 1).total == 46.0);
  s.final_activation = nets::FinalActivation::none;
  s.residual_blocks = 1;
  CHECK(count_flops(s, 1).total == 92.0);
  CHECK(layer_ops(s, "n").size() == 7);

  for (std::size_t cd : {nets::kTextCondDim, nets::kActionCondDim}) {
    const auto gv = nets::generator_spec(nets::Arch::vanilla, cd), gd = nets::generator_spec(nets::Arch::deep, cd);
    const auto dv = nets::discriminator_spec(nets::Arch::vanilla, cd);
    const auto dd = nets::discriminator_spec(nets::Arch::deep, cd);
    CHECK(count_flops(gd).total > count_flops(gv).total);
    CHECK(count_flops(dd).total > count_flops(dv).total);
    CHECK(count_flops(gv, 64).total * 32.0 == count_flops(gv, 2048).total);
  }

  const auto g = layer_ops(nets::generator_spec(nets::Arch::deep, 10), "g");
  const auto d = layer_ops(nets::discriminator_spec(nets::Arch::deep, 10), "d");
  auto both = g;
  both.insert(both.end(), d.begin(), d.end());
  CHECK(count_flops(both, 7).total == count_flops(g, 7).total + count_flops(d, 7).total);

  nets::VaeConfig vae;
  vae.feature_dim = 3392;
  const auto gen = generation_flops(nets::Arch::vanilla, 10, vae, 5);
  const double dec = 5.0 * ((2.0 * 256 * 512 + 512) + 512 + (2.0 * 512 * 3392 + 3392));
  CHECK(gen.total == count_flops(nets::generator_spec(nets::Arch::vanilla, 10), 5).total + dec);

  nlohmann::json j = nlohmann::json::array();
  for (const auto& op : layer_ops(s, "n")) j.push_back({{"kind", to_string(op.kind)}, {"in", op.in}, {"out", op.out}});
  CHECK(count_flops(layer_ops_from_json(j), 3).total == count_flops(s, 3).total);
  j.push_back({{"kind", "conv"}, {"out", 3}});
  CHECK_THROWS_AS(layer_ops_from_json(j), std::invalid_argument);
  CHECK_THROWS_AS(count_flops(s, 0), std::invalid_argument);
}

TEST_CASE("pca projection") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  const std::size_t n = 400, d = 5;
  const double h = std::sqrt(0.5);
  const std::array<double, 5> u = {h, h, 0, 0, 0}, v = {0, 0, 0, 1, 0};
  std::vector<double> x, a;
  for (std::size_t i = 0; i < n; ++i) {
    a.push_back(3.0 * nd(rng));
    const double b = nd(rng), noise = 0.05;
    for (std::size_t k = 0; k < d; ++k) x.push_back(a.back() * u[k] + b * v[k] + noise * nd(rng) + 2.0);
  }
  const Tensor xs({n, d}, x);
  const std::vector<std::size_t> labels(n, 0);
  const auto p = pca_project(xs, labels);
  CHECK(p.coords.shape() == Shape{n, 2});
  double m0 = 0, m1 = 0, dot = 0, na = 0, nc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    m0 += p.coords.at(i, 0), m1 += p.coords.at(i, 1);
    dot += p.coords.at(i, 0) * a[i], na += a[i] * a[i], nc += p.coords.at(i, 0) * p.coords.at(i, 0);
  }
  CHECK(std::abs(m0) < 1e-9);
  CHECK(std::abs(m1) < 1e-9);
  CHECK(std::abs(dot) / std::sqrt(na * nc) > 0.99);

  // Captured variance beats random orthonormal 2-D projections.
  double captured = 0.0;
  for (double c : p.coords.data()) captured += c * c;
  std::mt19937_64 r2(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::array<std::array<double, 5>, 2> q{};
    for (auto& row : q) {
      for (auto& e : row) e = nd(r2);
    }
    auto normalize = [](std::array<double, 5>& w) {
      double s = 0;
      for (double e : w) s += e * e;
      for (double& e : w) e /= std::sqrt(s);
    };
    normalize(q[0]);
    double pr = 0;
    for (std::size_t k = 0; k < d; ++k) pr += q[0][k] * q[1][k];
    for (std::size_t k = 0; k < d; ++k) q[1][k] -= pr * q[0][k];
    normalize(q[1]);
    double other = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& w : q) {
        double c = 0;
        for (std::size_t k = 0; k < d; ++k) c += (x[i * d + k] - 2.0) * w[k];
        other += c * c;
      }
    }
    CHECK(captured >= other * 0.999);
  }

  // Collinear points leave the second axis at zero.
  std::vector<double> line;
  for (int i = 0; i < 10; ++i) line.insert(line.end(), {1.0 * i, 2.0 * i, -1.0 * i});
  const auto pl = pca_project(Tensor({10, 3}, line), std::vector<std::size_t>(10, 1));
  for (std::size_t i = 0; i < 10; ++i) CHECK(std::abs(pl.coords.at(i, 1)) < 1e-12);
  CHECK(pl.coords.at(9, 0) > 0.0);
  CHECK_THROWS_AS(pca_project(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}), {0, 1}), std::invalid_argument);
}

TEST_CASE("silhouette") {
  const Tensor pts = Tensor::matrix({{0}, {1}, {10}, {11}});
  const double oracle = (9.5 / 10.5 + 8.5 / 9.5) / 2.0;
  CHECK(silhouette(pts, {0, 0, 1, 1}) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(silhouette(pts, {0, 1, 0, 1}) < 0.0);
  CHECK_THROWS_AS(silhouette(pts, {0, 0, 0, 0}), std::invalid_argument);
}

TEST_CASE("summaries") {
  const auto s = summarize({1.0, 2.0, 3.0});
  CHECK(s.mean == doctest::Approx(2.0));
  REQUIRE(s.ci95);
  CHECK(*s.ci95 == doctest::Approx(1.96 / std::sqrt(3.0)));
  const auto one = summarize({4.0});
  CHECK(!one.ci95);
  CHECK(!to_json(one).contains("ci95"));
  CHECK_THROWS_AS(summarize({}), std::invalid_argument);
}

TEST_CASE("action_text_conditions") {
  const Tensor c = action_text_conditions({2, 0, 2});
  CHECK(c.shape() == Shape{3, data::kTextDim});
  const auto t = data::embed_text(data::prompt_templates(2).front()).values;
  for (std::size_t k = 0; k < data::kTextDim; ++k) CHECK(c.at(0, k) == t[k]);
  CHECK(c.row(0)[5] == c.row(2)[5]);
}

TEST_CASE("evaluator training and gate") {
  data::DatasetConfig dc;
  dc.n_per_action = 20;
  dc.seed = 3;
  const auto ds = data::make_dataset(dc);
  EvaluatorConfig ec;
  ec.epochs = 15;
  const auto e = train_evaluator(ds, ec);
  CHECK(e.heldout_accuracy >= 0.95);
  CHECK(e.embed_motion(data::feature_matrix(ds.test)).shape() == Shape{ds.test.size(), kEmbedDim});

  const auto again = train_evaluator(ds, ec);
  CHECK(to_json(again) == to_json(e));
  const auto loaded = evaluator_from_json(nlohmann::json::parse(to_json(e).dump()));
  const Tensor f = data::feature_matrix(ds.test);
  CHECK(loaded.embed_motion(f) == e.embed_motion(f));
  CHECK(action_accuracy(loaded, f, data::labels_of(ds.test)) == e.heldout_accuracy);
  CHECK_THROWS_AS(action_accuracy(e, f, {0}), std::invalid_argument);

  // A cyclic label shift makes every intended label wrong for a perfect
  // classifier; accuracy falls to at most the error rate.
  auto shifted = data::labels_of(ds.test);
  for (auto& l : shifted) l = (l + 1) % dc.num_actions;
  CHECK(action_accuracy(e, f, shifted) <= 1.0 - e.heldout_accuracy + 1e-12);

  // Matched pairs are closer than random pairings.
  const Tensor me = e.embed_motion(f);
  const Tensor ce = e.embed_condition(action_text_conditions(data::labels_of(ds.test)));
  const double matched = mm_dist(me, ce);
  std::vector<std::size_t> perm(ds.test.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 prng(2);
  double shuffled = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(perm.begin(), perm.end(), prng);
    shuffled += mm_dist(me, train::gather_rows(ce, perm)) / 10.0;
  }
  CHECK(matched < shuffled);

  // Disjoint halves of one action sit closer than a different action.
  const Tensor tf = data::feature_matrix(ds.train);
  const auto tl = data::labels_of(ds.train);
  std::vector<std::size_t> a0, a1;
  for (std::size_t i = 0; i < tl.size(); ++i) {
    if (tl[i] == 0) a0.push_back(i);
    if (tl[i] == 1) a1.push_back(i);
  }
  const std::vector<std::size_t> h0(a0.begin(), a0.begin() + a0.size() / 2), h1(a0.begin() + a0.size() / 2, a0.end());
  const Tensor emb = e.embed_motion(tf);
  CHECK(fid(train::gather_rows(emb, h0), train::gather_rows(emb, h1)) <
        fid(train::gather_rows(emb, h0), train::gather_rows(emb, a1)));

  // Matched motion/condition pairs retrieve well above chance.
  std::mt19937_64 rng(1);
  const auto r = r_precision(e.embed_motion(f), e.embed_condition(action_text_conditions(data::labels_of(ds.test))),
                             8, rng);
  CHECK(r[0] > 0.5);

  EvaluatorConfig frozen = ec;
  frozen.lr = 1e-12;
  frozen.epochs = 1;
  CHECK_THROWS_AS(train_evaluator(ds, frozen), std::runtime_error);

  data::DatasetConfig tiny = dc;
  tiny.n_per_action = 2;
  CHECK_THROWS_AS(train_evaluator(data::make_dataset(tiny), ec), std::invalid_argument);
}
