#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "lsgan/synthdata.hpp"

using namespace lsgan;
using namespace lsgan::data;

namespace {

double dist(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("lsgan_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

// Independent resampling oracle: linear interpolation at i*(L-1)/63.
Vec3 resampled(const MotionSequence& m, std::size_t i, std::size_t joint) {
  const double t = static_cast<double>(i) * static_cast<double>(m.length - 1) / 63.0;
  const auto k = std::min(static_cast<std::size_t>(std::floor(t)), m.length - 1);
  const auto k1 = std::min(k + 1, m.length - 1);
  const double f = t - static_cast<double>(k);
  const Vec3 a = m.at(k, joint), b = m.at(k1, joint);
  return {(1 - f) * a[0] + f * b[0], (1 - f) * a[1] + f * b[1], (1 - f) * a[2] + f * b[2]};
}

}  // namespace

TEST_CASE("walk_circle closes its loop after one period") {
  std::mt19937_64 rng(1);
  const auto m = generate_motion({1}, 120, rng, {0.0});
  // Nominal lap is 4 s = 80 frames at 20 fps.
  CHECK(dist(m.at(0, Joint::root), m.at(80, Joint::root)) < 0.1);
  CHECK(dist(m.at(0, Joint::root), m.at(40, Joint::root)) > 2.0);
}

TEST_CASE("jump clears at least 0.2 m") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto m = generate_motion({2}, 40, rng);
    double lo = 1e9, hi = -1e9;
    for (std::size_t t = 0; t < m.length; ++t) {
      lo = std::min(lo, m.at(t, Joint::root)[1]);
      hi = std::max(hi, m.at(t, Joint::root)[1]);
    }
    CHECK(hi - lo >= 0.2);
  }
}

TEST_CASE("zero variation makes samples seed-independent") {
  std::mt19937_64 a(1), b(999);
  for (std::size_t act = 0; act < kNumActions; ++act) {
    CHECK(generate_motion({act}, 77, a, {0.0}).positions == generate_motion({act}, 77, b, {0.0}).positions);
  }
  std::mt19937_64 c(1), d(2);
  CHECK(generate_motion({0}, 77, c).positions != generate_motion({0}, 77, d).positions);
}

TEST_CASE("generate_motion rejects bad inputs") {
  std::mt19937_64 rng(0);
  CHECK_THROWS_AS(generate_motion({0}, 39, rng), std::invalid_argument);
  CHECK_THROWS_AS(generate_motion({0}, 197, rng), std::invalid_argument);
  CHECK_THROWS_AS(generate_motion({12}, 60, rng), std::invalid_argument);
}

TEST_CASE("bone lengths are constant over frames") {
  const std::pair<Joint, Joint> bones[] = {{root, spine},        {spine, head},        {spine, left_hand},
                                           {spine, right_hand},  {pelvis, left_foot},  {pelvis, right_foot},
                                           {root, pelvis}};
  for (std::size_t act = 0; act < kNumActions; ++act) {
    std::mt19937_64 rng(act + 10);
    const auto m = generate_motion({act}, 196, rng);
    for (auto [p, c] : bones) {
      const double l0 = dist(m.at(0, p), m.at(0, c));
      for (std::size_t t = 1; t < m.length; ++t) CHECK(std::abs(dist(m.at(t, p), m.at(t, c)) - l0) < 1e-9);
    }
    for (double v : m.positions) CHECK(std::isfinite(v));
  }
}

TEST_CASE("featurize examples") {
  using L = FeatureLayout;
  CHECK(kFeatureDim == 3392);

  SUBCASE("static zero motion has zero velocity") {
    const auto f = featurize(MotionSequence::blank(50));
    for (std::size_t i = 0; i < L::velocity_size; ++i) CHECK(f.values[L::velocity_offset + i] == 0.0);
  }
  SUBCASE("feet pinned at ground height are in contact") {
    auto m = MotionSequence::blank(90);
    for (std::size_t t = 0; t < m.length; ++t) {
      m.set(t, left_foot, {0.1 * static_cast<double>(t), 0.0, 0.3});
      m.set(t, right_foot, {-0.2, 0.0, 0.05 * static_cast<double>(t)});
    }
    const auto f = featurize(m);
    for (std::size_t i = 0; i < L::contact_size; ++i) CHECK(f.values[L::contact_offset + i] == 1.0);
  }
  SUBCASE("a 64-frame sequence is not altered by resampling") {
    std::mt19937_64 rng(3);
    const auto m = generate_motion({7}, 64, rng);
    const auto f = featurize(m);
    for (std::size_t i = 0; i < kResampledFrames; ++i) {
      for (std::size_t d = 0; d < 3; ++d) CHECK(f.values[L::root_offset + 3 * i + d] == m.at(i, root)[d]);
    }
    const auto back = unfeaturize(f.values);
    for (std::size_t i = 0; i < back.positions.size(); ++i) CHECK(back.positions[i] == doctest::Approx(m.positions[i]).epsilon(1e-14));
  }
}

TEST_CASE("featurize: velocities are forward differences of resampled positions") {
  using L = FeatureLayout;
  std::mt19937_64 rng(11);
  const auto m = generate_motion({0}, 137, rng);
  const auto f = featurize(m);
  for (std::size_t i = 0; i + 1 < kResampledFrames; ++i) {
    for (std::size_t j = 0; j < kJoints; ++j) {
      const Vec3 a = resampled(m, i, j), b = resampled(m, i + 1, j);
      for (std::size_t d = 0; d < 3; ++d) {
        CHECK(f.values[L::velocity_offset + (i * kJoints + j) * 3 + d] == doctest::Approx((b[d] - a[d]) * kFps).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("featurize: translation moves only the root block") {
  using L = FeatureLayout;
  for (std::size_t act : {0, 4, 10}) {
    std::mt19937_64 rng(act);
    const auto m = generate_motion({act}, 101, rng);
    auto shifted = m;
    const Vec3 offset{1.25, -0.5, 3.0};
    for (std::size_t i = 0; i < shifted.positions.size(); ++i) shifted.positions[i] += offset[i % 3];
    const auto f = featurize(m), g = featurize(shifted);
    for (std::size_t i = 0; i < L::pose_size; ++i) CHECK(std::abs(f.values[i] - g.values[i]) < 1e-12);
    for (std::size_t i = 0; i < kResampledFrames; ++i) {
      for (std::size_t d = 0; d < 3; ++d) {
        CHECK(std::abs(g.values[L::root_offset + 3 * i + d] - f.values[L::root_offset + 3 * i + d] - offset[d]) < 1e-12);
      }
    }
  }
}

TEST_CASE("embed_text") {
  const auto a = embed_text("a person walks");
  CHECK(a.kind == ConditionKind::text);
  CHECK(a.values.size() == kTextDim);
  CHECK(a.values == embed_text("a person walks").values);

  double norm = 0.0;
  for (double v : a.values.data()) norm += v * v;
  CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-12);

  const auto b = embed_text("a person jumps");
  double cosine = 0.0;
  for (std::size_t i = 0; i < kTextDim; ++i) cosine += a.values[i] * b.values[i];
  CHECK(cosine < 1.0 - 1e-3);

  // Case, punctuation and token order do not matter.
  const auto c = embed_text("Walks, PERSON a!");
  for (std::size_t i = 0; i < kTextDim; ++i) CHECK(std::abs(a.values[i] - c.values[i]) < 1e-14);

  CHECK_THROWS_AS(embed_text(""), std::invalid_argument);
  CHECK_THROWS_AS(embed_text("  ?! "), std::invalid_argument);
}

TEST_CASE("embed_action") {
  const auto table = identity_embedding_table(kNumActions, 5);
  for (std::size_t k = 0; k < kActionDim; ++k) {
    const auto c = embed_action({k}, table);
    for (std::size_t i = 0; i < kActionDim; ++i) CHECK(c.values[i] == (i == k ? 1.0 : 0.0));
  }
  CHECK(embed_action({11}, table).values == embed_action({11}, table).values);
  CHECK(embed_action({10}, table).values != embed_action({11}, table).values);
  CHECK_THROWS_AS(embed_action({12}, table), std::invalid_argument);

  // Perturbing row 3 only changes action 3's embedding.
  auto v = table.table.to_vector();
  v[3 * kActionDim + 7] += 0.5;
  const EmbeddingTable perturbed{Tensor(table.table.shape(), v)};
  for (std::size_t k = 0; k < kNumActions; ++k) {
    const bool same = embed_action({k}, perturbed).values == embed_action({k}, table).values;
    CHECK(same == (k != 3));
  }
}

TEST_CASE("make_dataset counts and split") {
  DatasetConfig cfg;
  cfg.n_per_action = 50;
  cfg.seed = 7;
  const auto ds = make_dataset(cfg);
  CHECK(ds.train.size() + ds.test.size() == 600);
  for (std::size_t a = 0; a < kNumActions; ++a) {
    CHECK(std::count_if(ds.train.begin(), ds.train.end(), [a](const Sample& s) { return s.motion.action_id == a; }) == 40);
    CHECK(std::count_if(ds.test.begin(), ds.test.end(), [a](const Sample& s) { return s.motion.action_id == a; }) == 10);
  }
  for (const auto& s : ds.train) {
    CHECK(s.motion.length >= kMinLength);
    CHECK(s.motion.length <= kMaxLength);
    const auto& tpl = prompt_templates(s.motion.action_id);
    CHECK(std::find(tpl.begin(), tpl.end(), s.motion.prompt) != tpl.end());
    CHECK(s.condition.values == embed_text(s.motion.prompt).values);
  }

  DatasetConfig bad = cfg;
  bad.split_ratio = 1.5;
  CHECK_THROWS_AS(make_dataset(bad), std::invalid_argument);
  bad = cfg;
  bad.n_per_action = 5;
  CHECK_THROWS_AS(make_dataset(bad), std::invalid_argument);
  bad = cfg;
  bad.num_actions = 13;
  CHECK_THROWS_AS(make_dataset(bad), std::invalid_argument);
}

TEST_CASE("dataset files are byte-identical per seed and round trip") {
  DatasetConfig cfg;
  cfg.n_per_action = 10;
  cfg.seed = 42;
  cfg.num_actions = 4;
  const auto d1 = temp_dir("ds1"), d2 = temp_dir("ds2");
  write_dataset(d1, make_dataset(cfg));
  write_dataset(d2, make_dataset(cfg));
  for (const char* f : {"train.jsonl", "test.jsonl", "manifest.json"}) CHECK(slurp(d1 / f) == slurp(d2 / f));

  const auto original = make_dataset(cfg);
  const auto loaded = read_dataset(d1);
  REQUIRE(loaded.train.size() == original.train.size());
  for (std::size_t i = 0; i < loaded.train.size(); ++i) {
    CHECK(loaded.train[i].motion.positions == original.train[i].motion.positions);
    CHECK(loaded.train[i].features.values == original.train[i].features.values);
    CHECK(loaded.train[i].condition.values == original.train[i].condition.values);
  }
  CHECK(loaded.config.seed == 42);
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST_CASE("motion csv export") {
  std::mt19937_64 rng(0);
  const auto m = generate_motion({3}, 40, rng);
  const auto dir = temp_dir("csv");
  std::filesystem::create_directories(dir);
  write_motion_csv(dir / "m.csv", m);
  std::istringstream in(slurp(dir / "m.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "frame,joint,x,y,z");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 40 * kJoints);
  std::filesystem::remove_all(dir);
}
