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

#include "lsgan/synthdata.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace lsgan::data {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

// Bone lengths (metres). Every child joint is parent + length * unit vector.
constexpr double kPelvisDrop = 0.10;
constexpr double kSpineLen = 0.35;
constexpr double kNeckLen = 0.30;
constexpr double kArmLen = 0.65;
constexpr double kLegLen = 0.85;
constexpr double kArmRestAbduction = 0.20;
constexpr double kLegRestAbduction = 0.10;

Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }

struct Frame {
  Vec3 forward;
  Vec3 right;
  Vec3 up{0.0, 1.0, 0.0};
};

Frame body_frame(double heading) {
  return {{std::sin(heading), 0.0, std::cos(heading)}, {std::cos(heading), 0.0, -std::sin(heading)}};
}

// Unit limb direction: swing `pitch` forward from hanging straight down, then
// abduct by `abduction` towards `side` (+1 right, -1 left).
Vec3 limb_dir(const Frame& f, double pitch, double abduction, double side) {
  const double ca = std::cos(abduction);
  return (std::sin(pitch) * ca) * f.forward + (side * std::sin(abduction)) * f.right +
         (-std::cos(pitch) * ca) * f.up;
}

// Unit trunk direction leaning forward by `lean` from vertical.
Vec3 trunk_dir(const Frame& f, double lean) { return std::cos(lean) * f.up + std::sin(lean) * f.forward; }

struct Pose {
  Vec3 root{0.0, 0.0, 0.0};
  double heading = 0.0;
  double lean = 0.0;
  double arm_pitch[2] = {0.0, 0.0};  // left, right
  double arm_abduction[2] = {kArmRestAbduction, kArmRestAbduction};
  double leg_pitch[2] = {0.0, 0.0};
  double leg_abduction[2] = {kLegRestAbduction, kLegRestAbduction};
};

// Root height that puts a foot with the given limb angles on the ground.
double standing_height(double pitch, double abduction) {
  return kPelvisDrop + kLegLen * std::cos(pitch) * std::cos(abduction);
}

void write_pose(MotionSequence& m, std::size_t t, const Pose& p) {
  const Frame f = body_frame(p.heading);
  const Vec3 root = p.root;
  const Vec3 pelvis = root + (-kPelvisDrop) * f.up;
  const Vec3 spine = root + kSpineLen * trunk_dir(f, p.lean);
  const Vec3 head = spine + kNeckLen * trunk_dir(f, p.lean);
  m.set(t, Joint::root, root);
  m.set(t, Joint::spine, spine);
  m.set(t, Joint::head, head);
  m.set(t, Joint::left_hand, spine + kArmLen * limb_dir(f, p.arm_pitch[0], p.arm_abduction[0], -1.0));
  m.set(t, Joint::right_hand, spine + kArmLen * limb_dir(f, p.arm_pitch[1], p.arm_abduction[1], 1.0));
  m.set(t, Joint::left_foot, pelvis + kLegLen * limb_dir(f, p.leg_pitch[0], p.leg_abduction[0], -1.0));
  m.set(t, Joint::right_foot, pelvis + kLegLen * limb_dir(f, p.leg_pitch[1], p.leg_abduction[1], 1.0));
  m.set(t, Joint::pelvis, pelvis);
}

// Raised-cosine envelope in [0, 1].
double rise(double angle) { return 0.5 * (1.0 - std::cos(angle)); }

struct Knobs {
  double amp = 1.0;
  double phase = 0.0;
  double speed = 1.0;
};

Pose action_pose(std::size_t action, double t, const Knobs& k) {
  Pose p;
  const double base = standing_height(0.0, kLegRestAbduction);
  p.root = {0.0, base, 0.0};
  auto gait = [&](double freq, double leg_amp, double arm_amp, double bounce) {
    const double w = 2.0 * kPi * freq * k.speed;
    const double s = std::sin(w * t + k.phase);
    p.leg_pitch[0] = leg_amp * k.amp * s;
    p.leg_pitch[1] = -p.leg_pitch[0];
    p.arm_pitch[0] = -arm_amp * k.amp * s;
    p.arm_pitch[1] = -p.arm_pitch[0];
    p.root[1] = base + bounce * std::abs(s);
  };

  switch (action) {
    case 0: {  // walk_forward
      gait(1.0, 0.45, 0.35, 0.02);
      p.root[2] = 1.2 * k.speed * t;
      break;
    }
    case 1: {  // walk_circle: one lap every 4 s at nominal speed
      gait(1.0, 0.40, 0.30, 0.02);
      const double radius = 1.5 * k.amp;
      const double omega = 2.0 * kPi / 4.0 * k.speed;
      p.root[0] = radius * (1.0 - std::cos(omega * t));
      p.root[2] = radius * std::sin(omega * t);
      p.heading = omega * t;
      break;
    }
    case 2: {  // jump
      const double w = 2.0 * kPi * 0.8 * k.speed;
      const double s = std::sin(w * t + k.phase);
      p.root[1] = base + 0.3 * k.amp * std::max(0.0, s);
      p.leg_pitch[0] = p.leg_pitch[1] = 0.3 * std::max(0.0, -s);
      p.arm_pitch[0] = p.arm_pitch[1] = 2.2 * std::max(0.0, s);
      break;
    }
    case 3: {  // jumping_jacks
      const double s = rise(2.0 * kPi * 1.2 * k.speed * t + k.phase);
      p.arm_abduction[0] = p.arm_abduction[1] = kArmRestAbduction + 2.6 * k.amp * s;
      p.leg_abduction[0] = p.leg_abduction[1] = kLegRestAbduction + 0.35 * s;
      p.root[1] = standing_height(0.0, p.leg_abduction[0]) + 0.05 * std::sin(kPi * s);
      break;
    }
    case 4: {  // wave
      const double w = 2.0 * kPi * 1.5 * k.speed;
      p.arm_pitch[1] = 0.3;
      p.arm_abduction[1] = 2.4 + 0.4 * k.amp * std::sin(w * t + k.phase);
      p.lean = 0.03 * std::sin(0.5 * w * t);
      break;
    }
    case 5: {  // kick_left
      const double w = 2.0 * kPi * 0.7 * k.speed;
      p.leg_pitch[0] = 1.2 * k.amp * std::max(0.0, std::sin(w * t + k.phase));
      p.arm_pitch[1] = 0.5 * p.leg_pitch[0];
      p.lean = -0.15 * p.leg_pitch[0];
      break;
    }
    case 6: {  // drink
      const double s = rise(2.0 * kPi * 0.4 * k.speed * t + k.phase);
      p.arm_pitch[1] = 0.3 + 1.9 * k.amp * s;
      p.arm_abduction[1] = kArmRestAbduction - 0.15 * s;
      p.lean = -0.08 * s;
      break;
    }
    case 7: {  // jog
      gait(1.6, 0.70, 0.60, 0.06);
      p.root[2] = 2.5 * k.speed * t;
      p.lean = 0.12;
      break;
    }
    case 8: {  // raise_arms
      const double s = rise(2.0 * kPi * 0.5 * k.speed * t + k.phase);
      p.arm_pitch[0] = p.arm_pitch[1] = 2.8 * k.amp * s;
      break;
    }
    case 9: {  // sidestep
      const double w = 2.0 * kPi * 0.8 * k.speed;
      const double s = std::sin(w * t + k.phase);
      p.root[0] = 0.3 * k.amp * s;
      p.leg_abduction[0] = kLegRestAbduction + 0.25 * std::max(0.0, -s);
      p.leg_abduction[1] = kLegRestAbduction + 0.25 * std::max(0.0, s);
      p.root[1] = standing_height(0.0, std::max(p.leg_abduction[0], p.leg_abduction[1]));
      break;
    }
    case 10: {  // sit: squat down and back up, feet kept on the ground
      const double s = rise(2.0 * kPi * 0.35 * k.speed * t + k.phase);
      p.root[1] = base - 0.35 * k.amp * s;
      const double pitch =
          std::acos(std::clamp((p.root[1] - kPelvisDrop) / (kLegLen * std::cos(kLegRestAbduction)), -1.0, 1.0));
      p.leg_pitch[0] = p.leg_pitch[1] = pitch;
      p.lean = 0.5 * s;
      p.arm_pitch[0] = p.arm_pitch[1] = 1.2 * s;
      break;
    }
    case 11: {  // turn in place
      const double w = 2.0 * kPi * 1.0 * k.speed;
      p.heading = 0.8 * k.amp * k.speed * t;
      p.leg_pitch[0] = 0.15 * std::sin(w * t + k.phase);
      p.leg_pitch[1] = -p.leg_pitch[0];
      break;
    }
    default:
      throw std::invalid_argument("generate_motion: action id " + std::to_string(action) + " out of range");
  }
  return p;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

const std::array<std::string_view, kNumActions>& action_names() {
  static const std::array<std::string_view, kNumActions> names = {
      "walk_forward", "walk_circle", "jump", "jumping_jacks", "wave", "kick_left",
      "drink",        "jog",         "raise_arms", "sidestep", "sit", "turn"};
  return names;
}

Vec3 MotionSequence::at(std::size_t frame, std::size_t joint) const {
  const std::size_t i = (frame * kJoints + joint) * 3;
  return {positions[i], positions[i + 1], positions[i + 2]};
}

void MotionSequence::set(std::size_t frame, std::size_t joint, const Vec3& p) {
  const std::size_t i = (frame * kJoints + joint) * 3;
  positions[i] = p[0];
  positions[i + 1] = p[1];
  positions[i + 2] = p[2];
}

MotionSequence MotionSequence::blank(std::size_t length) {
  MotionSequence m;
  m.length = length;
  m.positions.assign(length * kJoints * 3, 0.0);
  return m;
}

std::string to_string(ConditionKind kind) { return kind == ConditionKind::text ? "text" : "action"; }

ConditionKind parse_condition_kind(const std::string& s) {
  if (s == "text") return ConditionKind::text;
  if (s == "action") return ConditionKind::action;
  throw std::invalid_argument("unknown condition kind '" + s + "' (expected text|action)");
}

MotionSequence generate_motion(ActionLabel action, std::size_t length, std::mt19937_64& rng, Variation variation) {
  if (action.id >= kNumActions) {
    throw std::invalid_argument("generate_motion: action id " + std::to_string(action.id) + " out of range");
  }
  if (length < kMinLength || length > kMaxLength) {
    throw std::invalid_argument("generate_motion: length " + std::to_string(length) + " outside [40, 196]");
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double s = variation.scale;
  Knobs k;
  k.amp = 1.0 + s * (0.4 * u(rng) - 0.2);
  k.phase = s * 2.0 * kPi * u(rng);
  k.speed = 1.0 + s * (0.3 * u(rng) - 0.15);

  MotionSequence m = MotionSequence::blank(length);
  m.action_id = action.id;
  for (std::size_t t = 0; t < length; ++t) {
    write_pose(m, t, action_pose(action.id, static_cast<double>(t) / kFps, k));
  }
  return m;
}

MotionFeatures featurize(const MotionSequence& m) {
  using L = FeatureLayout;
  if (m.length < 2 || m.positions.size() != m.length * kJoints * 3) {
    throw std::invalid_argument("featurize: malformed motion sequence");
  }
  constexpr std::size_t F = kResampledFrames;
  std::vector<double> abs(F * kJoints * 3);
  const double span = static_cast<double>(m.length - 1);
  for (std::size_t i = 0; i < F; ++i) {
    const double t = static_cast<double>(i) * span / static_cast<double>(F - 1);
    const std::size_t k = std::min(static_cast<std::size_t>(t), m.length - 1);
    const std::size_t k1 = std::min(k + 1, m.length - 1);
    const double frac = t - static_cast<double>(k);
    for (std::size_t j = 0; j < kJoints; ++j) {
      const Vec3 a = m.at(k, j);
      const Vec3 b = m.at(k1, j);
      for (std::size_t d = 0; d < 3; ++d) abs[(i * kJoints + j) * 3 + d] = (1.0 - frac) * a[d] + frac * b[d];
    }
  }

  MotionFeatures f;
  f.values.assign(L::width, 0.0);
  auto& v = f.values;
  for (std::size_t i = 0; i < F; ++i) {
    const double* root = &abs[(i * kJoints + Joint::root) * 3];
    for (std::size_t j = 0; j < kJoints; ++j) {
      for (std::size_t d = 0; d < 3; ++d) {
        const std::size_t idx = (i * kJoints + j) * 3 + d;
        v[L::pose_offset + idx] = abs[idx] - root[d];
        const std::size_t src = i + 1 < F ? i : i - 1;  // last frame repeats the final difference
        v[L::velocity_offset + idx] =
            (abs[((src + 1) * kJoints + j) * 3 + d] - abs[(src * kJoints + j) * 3 + d]) * m.fps;
      }
    }
    v[L::contact_offset + 2 * i] = abs[(i * kJoints + Joint::left_foot) * 3 + 1] < kContactHeight ? 1.0 : 0.0;
    v[L::contact_offset + 2 * i + 1] = abs[(i * kJoints + Joint::right_foot) * 3 + 1] < kContactHeight ? 1.0 : 0.0;
    for (std::size_t d = 0; d < 3; ++d) v[L::root_offset + 3 * i + d] = root[d];
  }
  return f;
}

MotionSequence unfeaturize(std::span<const double> features) {
  using L = FeatureLayout;
  if (features.size() != L::width) {
    throw std::invalid_argument("unfeaturize: expected " + std::to_string(L::width) + " features, got " +
                                std::to_string(features.size()));
  }
  MotionSequence m = MotionSequence::blank(kResampledFrames);
  for (std::size_t i = 0; i < kResampledFrames; ++i) {
    for (std::size_t j = 0; j < kJoints; ++j) {
      Vec3 p;
      for (std::size_t d = 0; d < 3; ++d) {
        p[d] = features[L::pose_offset + (i * kJoints + j) * 3 + d] + features[L::root_offset + 3 * i + d];
      }
      m.set(i, j, p);
    }
  }
  return m;
}

EmbeddingTable identity_embedding_table(std::size_t num_actions, std::uint64_t seed) {
  if (num_actions == 0) throw std::invalid_argument("embedding table: need at least one action");
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(kActionDim));
  std::uniform_real_distribution<double> u(-bound, bound);
  std::vector<double> v(num_actions * kActionDim, 0.0);
  for (std::size_t r = 0; r < num_actions; ++r) {
    for (std::size_t c = 0; c < kActionDim; ++c) {
      v[r * kActionDim + c] = r < kActionDim ? (r == c ? 1.0 : 0.0) : u(rng);
    }
  }
  return {Tensor({num_actions, kActionDim}, std::move(v))};
}

ConditionVector embed_action(ActionLabel label, const EmbeddingTable& table) {
  if (table.table.rank() != 2 || table.table.cols() != kActionDim) {
    throw std::invalid_argument("embed_action: table must be [K x 10]");
  }
  if (label.id >= table.table.rows()) {
    throw std::invalid_argument("embed_action: action id " + std::to_string(label.id) + " out of range");
  }
  const auto row = table.table.row(label.id);
  return {ConditionKind::action, Tensor::vector(std::vector<double>(row.begin(), row.end()))};
}

std::vector<std::string> tokenize(std::string_view prompt) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : lowercase(prompt)) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(c);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

ConditionVector embed_text(std::string_view prompt) {
  const auto tokens = tokenize(prompt);
  if (tokens.empty()) throw std::invalid_argument("embed_text: prompt has no tokens");
  std::vector<double> acc(kTextDim, 0.0);
  for (const auto& tok : tokens) {
    std::mt19937_64 rng(fnv1a(tok));
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& a : acc) a += n(rng);
  }
  double norm = 0.0;
  for (auto& a : acc) {
    a /= static_cast<double>(tokens.size());
    norm += a * a;
  }
  norm = std::sqrt(norm);
  for (auto& a : acc) a /= norm;
  return {ConditionKind::text, Tensor::vector(std::move(acc))};
}

const std::vector<std::string>& prompt_templates(std::size_t action_id) {
  static const std::vector<std::vector<std::string>> templates = {
      {"a person walks forward", "someone walks straight ahead", "a person takes steps forward"},
      {"a person walks in a circle", "someone walks around in a circle", "a person circles around"},
      {"a person jumps up and down", "someone jumps in place", "a person hops upward"},
      {"a person does jumping jacks", "someone performs jumping jacks", "a person jumps spreading arms and legs"},
      {"a person waves with the right hand", "someone waves hello", "a person waves an arm"},
      {"a person kicks with the left leg", "someone kicks forward with the left foot", "a person does a left kick"},
      {"a person drinks from a cup", "someone raises a hand to drink", "a person takes a drink"},
      {"a person jogs forward", "someone runs ahead at a jog", "a person is jogging"},
      {"a person raises both arms", "someone lifts the arms overhead", "a person puts both hands up"},
      {"a person steps sideways", "someone sidesteps left and right", "a person shuffles to the side"},
      {"a person sits down and stands up", "someone squats down", "a person crouches and rises"},
      {"a person turns around in place", "someone rotates on the spot", "a person spins slowly"},
  };
  if (action_id >= templates.size()) throw std::out_of_range("prompt_templates: action id out of range");
  return templates[action_id];
}

void DatasetConfig::validate() const {
  if (n_per_action < 10) throw std::invalid_argument("dataset.n_per_action must be >= 10");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw std::invalid_argument("dataset.split_ratio must lie in (0, 1)");
  if (num_actions < 2 || num_actions > kNumActions) throw std::invalid_argument("dataset.num_actions must lie in [2, 12]");
  if (!(variation >= 0.0)) throw std::invalid_argument("dataset.variation must be >= 0");
  const auto n_train = static_cast<std::size_t>(std::llround(split_ratio * static_cast<double>(n_per_action)));
  if (n_train == 0 || n_train == n_per_action) {
    throw std::invalid_argument("dataset.split_ratio leaves an empty train or test split");
  }
}

Dataset make_dataset(const DatasetConfig& config) {
  config.validate();
  Dataset ds;
  ds.config = config;
  const auto n_train = static_cast<std::size_t>(std::llround(config.split_ratio * static_cast<double>(config.n_per_action)));
  for (std::size_t a = 0; a < config.num_actions; ++a) {
    for (std::size_t i = 0; i < config.n_per_action; ++i) {
      std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                        static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(i)};
      std::mt19937_64 rng(seq);
      const std::size_t length = std::uniform_int_distribution<std::size_t>(kMinLength, kMaxLength)(rng);
      const auto& prompts = prompt_templates(a);
      const std::size_t which = std::uniform_int_distribution<std::size_t>(0, prompts.size() - 1)(rng);
      Sample s;
      s.motion = generate_motion({a}, length, rng, {config.variation});
      s.motion.prompt = prompts[which];
      s.features = featurize(s.motion);
      s.condition = embed_text(s.motion.prompt);
      (i < n_train ? ds.train : ds.test).push_back(std::move(s));
    }
  }
  return ds;
}

Tensor feature_matrix(const std::vector<Sample>& samples) {
  if (samples.empty()) throw std::invalid_argument("feature_matrix: no samples");
  std::vector<double> v;
  v.reserve(samples.size() * kFeatureDim);
  for (const auto& s : samples) v.insert(v.end(), s.features.values.begin(), s.features.values.end());
  return Tensor::computed({samples.size(), kFeatureDim}, std::move(v));
}

std::vector<std::size_t> labels_of(const std::vector<Sample>& samples) {
  std::vector<std::size_t> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.motion.action_id);
  return out;
}

json to_json(const DatasetConfig& c) {
  return json{{"n_per_action", c.n_per_action},
              {"seed", c.seed},
              {"split_ratio", c.split_ratio},
              {"num_actions", c.num_actions},
              {"variation", c.variation}};
}

DatasetConfig dataset_config_from_json(const json& j) {
  DatasetConfig c;
  c.n_per_action = j.value("n_per_action", c.n_per_action);
  c.seed = j.value("seed", c.seed);
  c.split_ratio = j.value("split_ratio", c.split_ratio);
  c.num_actions = j.value("num_actions", c.num_actions);
  c.variation = j.value("variation", c.variation);
  return c;
}

json to_json(const Sample& s) {
  json frames = json::array();
  for (std::size_t t = 0; t < s.motion.length; ++t) {
    json joints = json::array();
    for (std::size_t j = 0; j < kJoints; ++j) joints.push_back(s.motion.at(t, j));
    frames.push_back(std::move(joints));
  }
  return json{{"action_id", s.motion.action_id},
              {"prompt", s.motion.prompt},
              {"L", s.motion.length},
              {"frames", std::move(frames)},
              {"features", s.features.values},
              {"condition", {{"kind", to_string(s.condition.kind)}, {"values", s.condition.values.values()}}}};
}

Sample sample_from_json(const json& j) {
  Sample s;
  s.motion.length = j.at("L");
  s.motion.action_id = j.at("action_id");
  s.motion.prompt = j.at("prompt");
  const auto& frames = j.at("frames");
  if (frames.size() != s.motion.length) throw std::invalid_argument("dataset record: frame count disagrees with L");
  s.motion.positions.reserve(s.motion.length * kJoints * 3);
  for (const auto& f : frames) {
    if (f.size() != kJoints) throw std::invalid_argument("dataset record: expected 8 joints per frame");
    for (const auto& p : f) {
      const auto v = p.get<Vec3>();
      s.motion.positions.insert(s.motion.positions.end(), v.begin(), v.end());
    }
  }
  s.features.values = j.at("features").get<std::vector<double>>();
  if (s.features.values.size() != kFeatureDim) throw std::invalid_argument("dataset record: wrong feature width");
  const auto& c = j.at("condition");
  s.condition = {parse_condition_kind(c.at("kind")), Tensor::vector(c.at("values").get<std::vector<double>>())};
  return s;
}

namespace {

void write_jsonl(const std::filesystem::path& path, const std::vector<Sample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& s : samples) out << to_json(s).dump() << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<Sample> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<Sample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(sample_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  std::filesystem::create_directories(dir);
  write_jsonl(dir / "train.jsonl", dataset.train);
  write_jsonl(dir / "test.jsonl", dataset.test);
  json manifest{{"schema_version", 1},
                {"config", to_json(dataset.config)},
                {"feature_dim", kFeatureDim},
                {"num_train", dataset.train.size()},
                {"num_test", dataset.test.size()}};
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + (dir / "manifest.json").string() + " for writing");
  out << manifest.dump(2) << '\n';
}

Dataset read_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("dataset manifest missing: " + (dir / "manifest.json").string());
  const json manifest = json::parse(in);
  Dataset ds;
  ds.config = dataset_config_from_json(manifest.at("config"));
  ds.train = read_jsonl(dir / "train.jsonl");
  ds.test = read_jsonl(dir / "test.jsonl");
  return ds;
}

void write_motion_csv(const std::filesystem::path& path, const MotionSequence& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "frame,joint,x,y,z\n";
  char buf[128];
  for (std::size_t t = 0; t < m.length; ++t) {
    for (std::size_t j = 0; j < kJoints; ++j) {
      const Vec3 p = m.at(t, j);
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.9g,%.9g,%.9g\n", t, j, p[0], p[1], p[2]);
      out << buf;
    }
  }
}

}  // namespace lsgan::data
