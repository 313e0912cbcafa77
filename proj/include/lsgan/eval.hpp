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


// Metric suite over a frozen evaluator: FID, R-precision, MM-Dist,
// diversity, multimodality, APE/AVE, action accuracy; analytic FLOP counts;
// PCA latent projection.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsgan/nets.hpp"
#include "lsgan/synthdata.hpp"
#include "lsgan/tensor.hpp"
#include "lsgan/training.hpp"

namespace lsgan::eval {

inline constexpr std::size_t kEmbedDim = 32;

struct EvaluatorConfig {
  std::size_t hidden = 256;
  std::size_t epochs = 40;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  double margin = 0.5;
  double min_accuracy = 0.95;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Frozen motion encoder standing in for a pretrained evaluator.
struct EvaluatorNet {
  std::size_t num_classes = 0;
  train::FeatureScaler scaler;
  nets::Network trunk;        // features -> 256 -> 256
  nets::Network classifier;   // 256 -> K
  nets::Network motion_head;  // 256 -> 32
  nets::Network cond_head;    // 768 -> 32
  double heldout_accuracy = 0.0;

  Tensor logits(const Tensor& features) const;
  std::vector<std::size_t> classify(const Tensor& features) const;
  /// Joint-space motion embeddings; also the feature space for FID.
  Tensor embed_motion(const Tensor& features) const;
  Tensor embed_condition(const Tensor& text_conditions) const;
};

/// Trains on the train split and gates on test-split accuracy.
EvaluatorNet train_evaluator(const data::Dataset& dataset, const EvaluatorConfig& config);

nlohmann::json to_json(const EvaluatorNet& e);
EvaluatorNet evaluator_from_json(const nlohmann::json& j);

/// Canonical text condition for an action: the first prompt template.
Tensor action_text_conditions(const std::vector<std::size_t>& labels);

// Statistics.

struct GaussianStats {
  Tensor mean;        // [d]
  Tensor covariance;  // [d x d]
};

GaussianStats fit_gaussian(const Tensor& features);
double frechet_distance(const GaussianStats& a, const GaussianStats& b);
double fid(const Tensor& a, const Tensor& b);

double diversity(const Tensor& features, std::size_t n_pairs, std::mt19937_64& rng);
double multimodality(const std::vector<Tensor>& groups, std::size_t n_pairs_per_group, std::mt19937_64& rng);

/// Top-1/2/3 retrieval rates with a pool of the true condition plus
/// pool_size - 1 mismatches drawn from rows whose condition differs.
std::array<double, 3> r_precision(const Tensor& motion_embs, const Tensor& cond_embs, std::size_t pool_size,
                                  std::mt19937_64& rng);
double mm_dist(const Tensor& motion_embs, const Tensor& cond_embs);

struct ApeAve {
  double ape_root = 0, ape_traj = 0, ape_mean_pose = 0, ape_mean_joints = 0;
  double ave_root = 0, ave_traj = 0, ave_mean_pose = 0, ave_mean_joints = 0;

  std::array<double, 8> values() const;
  static const std::array<const char*, 8>& names();
};

ApeAve ape_ave(const data::MotionSequence& generated, const data::MotionSequence& reference);

double action_accuracy(const EvaluatorNet& evaluator, const Tensor& features,
                       const std::vector<std::size_t>& intended_labels);

// FLOPs.

enum class LayerKind { linear, activation, residual_add };
std::string to_string(LayerKind k);
LayerKind parse_layer_kind(const std::string& s);

struct LayerOp {
  LayerKind kind = LayerKind::linear;
  std::size_t in = 0;
  std::size_t out = 0;  // elements for activation / residual_add
  std::string name;
};

/// Layer sequence executed by a network forward.
std::vector<LayerOp> layer_ops(const nets::MlpSpec& spec, const std::string& prefix);

struct FlopCount {
  double total = 0;
  std::vector<std::pair<std::string, double>> layers;
};

/// Per example: linear 2*in*out + out (in*out + out with macs), activation
/// and residual add 1 per element; scaled by batch.
FlopCount count_flops(const std::vector<LayerOp>& ops, std::size_t batch = 2048, bool macs = false);
FlopCount count_flops(const nets::MlpSpec& spec, std::size_t batch = 2048, bool macs = false);
/// Generator followed by the VAE decoder.
FlopCount generation_flops(nets::Arch arch, std::size_t cond_dim, const nets::VaeConfig& vae, std::size_t batch,
                           bool macs = false);
nlohmann::json to_json(const FlopCount& f);
std::vector<LayerOp> layer_ops_from_json(const nlohmann::json& j);

// Latent projection.

struct Projection {
  Tensor coords;  // [N x 2]
  std::vector<std::size_t> labels;
};

Projection pca_project(const Tensor& latents, const std::vector<std::size_t>& labels);
double silhouette(const Tensor& points, const std::vector<std::size_t>& labels);

// Repetition summaries.

struct Summary {
  double mean = 0;
  std::optional<double> ci95;  // 1.96 * std / sqrt(n), omitted for n = 1
  std::size_t n = 0;
};

Summary summarize(const std::vector<double>& values);
nlohmann::json to_json(const Summary& s);

}  // namespace lsgan::eval
