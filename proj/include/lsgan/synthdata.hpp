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

// Procedural conditional motion corpus: an 8-joint skeleton driven by
// per-action parametric templates, a fixed-width featurizer, and the two
// condition embedders (hashed text, learnable action table).

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lsgan/tensor.hpp"

namespace lsgan::data {

inline constexpr std::size_t kJoints = 8;
inline constexpr double kFps = 20.0;
inline constexpr std::size_t kMinLength = 40;
inline constexpr std::size_t kMaxLength = 196;
inline constexpr std::size_t kResampledFrames = 64;
inline constexpr double kContactHeight = 0.05;
inline constexpr std::size_t kNumActions = 12;
inline constexpr std::size_t kTextDim = 768;
inline constexpr std::size_t kActionDim = 10;

enum Joint : std::size_t { root = 0, spine, head, left_hand, right_hand, left_foot, right_foot, pelvis };

using Vec3 = std::array<double, 3>;

/// Feature layout, all blocks over the 64 resampled frames.
struct FeatureLayout {
  static constexpr std::size_t pose_offset = 0;  // root-relative joints
  static constexpr std::size_t pose_size = kResampledFrames * kJoints * 3;
  static constexpr std::size_t velocity_offset = pose_offset + pose_size;
  static constexpr std::size_t velocity_size = kResampledFrames * kJoints * 3;
  static constexpr std::size_t contact_offset = velocity_offset + velocity_size;
  static constexpr std::size_t contact_size = kResampledFrames * 2;
  static constexpr std::size_t root_offset = contact_offset + contact_size;
  static constexpr std::size_t root_size = kResampledFrames * 3;
  static constexpr std::size_t width = root_offset + root_size;
};

inline constexpr std::size_t kFeatureDim = FeatureLayout::width;

const std::array<std::string_view, kNumActions>& action_names();

struct ActionLabel {
  std::size_t id = 0;
};

struct MotionSequence {
  std::size_t length = 0;  // frames
  double fps = kFps;
  std::size_t action_id = 0;
  std::string prompt;
  std::vector<double> positions;  // [length][kJoints][3], metres, y up

  Vec3 at(std::size_t frame, std::size_t joint) const;
  void set(std::size_t frame, std::size_t joint, const Vec3& p);
  static MotionSequence blank(std::size_t length);
};

struct MotionFeatures {
  std::vector<double> values;  // kFeatureDim
};

enum class ConditionKind { text, action };
std::string to_string(ConditionKind kind);
ConditionKind parse_condition_kind(const std::string& s);

struct ConditionVector {
  ConditionKind kind = ConditionKind::text;
  Tensor values;
};

/// Per-sample variation knobs: amplitude, phase, speed. A zero scale pins
/// every knob to its nominal value.
struct Variation {
  double scale = 1.0;
};

MotionSequence generate_motion(ActionLabel action, std::size_t length, std::mt19937_64& rng,
                               Variation variation = {});

MotionFeatures featurize(const MotionSequence& m);

/// Inverse of the pose and root blocks: absolute joints at 64 frames.
MotionSequence unfeaturize(std::span<const double> features);

/// Lookup table of action embeddings [K x 10].
struct EmbeddingTable {
  Tensor table;
};

/// Rows 0..9 are one-hot; remaining rows are seeded small random vectors.
EmbeddingTable identity_embedding_table(std::size_t num_actions, std::uint64_t seed);
ConditionVector embed_action(ActionLabel label, const EmbeddingTable& table);

/// Deterministic 768-wide text embedding: hashed per-token Gaussian vectors,
/// mean-pooled and L2-normalised.
ConditionVector embed_text(std::string_view prompt);
std::vector<std::string> tokenize(std::string_view prompt);

const std::vector<std::string>& prompt_templates(std::size_t action_id);

struct DatasetConfig {
  std::size_t n_per_action = 50;
  std::uint64_t seed = 0;
  double split_ratio = 0.8;
  std::size_t num_actions = kNumActions;
  double variation = 1.0;

  void validate() const;
};

struct Sample {
  MotionSequence motion;
  MotionFeatures features;
  ConditionVector condition;  // text embedding of the prompt
};

struct Dataset {
  DatasetConfig config;
  std::vector<Sample> train;
  std::vector<Sample> test;
};

Dataset make_dataset(const DatasetConfig& config);

/// Stacks per-sample features into [N x kFeatureDim].
Tensor feature_matrix(const std::vector<Sample>& samples);
std::vector<std::size_t> labels_of(const std::vector<Sample>& samples);

// Files: train.jsonl, test.jsonl and manifest.json under `dir`.
nlohmann::json to_json(const DatasetConfig& config);
DatasetConfig dataset_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Sample& s);
Sample sample_from_json(const nlohmann::json& j);
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset read_dataset(const std::filesystem::path& dir);

/// CSV with header `frame,joint,x,y,z`.
void write_motion_csv(const std::filesystem::path& path, const MotionSequence& m);

}  // namespace lsgan::data
