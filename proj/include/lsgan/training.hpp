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


// VAE and latent GAN training: AdamW, the VAE objective, BCE and WGAN-GP
// adversarial steps, checkpoints, and lowest-FID snapshot selection.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsgan/autodiff.hpp"
#include "lsgan/nets.hpp"
#include "lsgan/synthdata.hpp"
#include "lsgan/tensor.hpp"

namespace lsgan::train {

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct AdamWState {
  AdamWConfig hyper;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;
};

AdamWState adamw_init(const std::vector<Tensor>& params, const AdamWConfig& hyper);

/// One decoupled-weight-decay Adam step; rewrites `params` in place.
void adamw_update(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamWState& state);

// Objectives.

/// Batch mean of -1/2 * sum_d (1 + logvar - mu^2 - exp(logvar)).
ad::Var kl_divergence(ad::Var mu, ad::Var logvar);
double kl_divergence(const Tensor& mu, const Tensor& logvar);

ad::Var vae_loss(ad::Var x, ad::Var x_hat, ad::Var mu, ad::Var logvar, double kl_weight);
double vae_loss(const Tensor& x, const Tensor& x_hat, const Tensor& mu, const Tensor& logvar, double kl_weight);

/// BCE discriminator loss: bce(D(real), 1) + bce(D(fake), 0).
ad::Var bce_discriminator_loss(ad::Var real_logits, ad::Var fake_logits);
/// Non-saturating generator loss bce(D(fake), 1).
ad::Var bce_generator_loss(ad::Var fake_logits);

struct CriticLoss {
  ad::Var loss;
  ad::Var penalty;  // lambda * mean (|grad| - 1)^2
  ad::Var gap;      // mean D(fake) - mean D(real)
};

/// WGAN-GP critic objective with explicit interpolation weights `eps` [B].
CriticLoss wgan_gp_critic_loss(const nets::BoundNetwork& d, const Tensor& real, const Tensor& fake, ad::Var cond,
                               double lambda_gp, const Tensor& eps);
CriticLoss wgan_gp_critic_loss(const nets::BoundNetwork& d, const Tensor& real, const Tensor& fake, ad::Var cond,
                               double lambda_gp, std::mt19937_64& rng);
ad::Var wgan_generator_loss(const nets::BoundNetwork& d, ad::Var fake, ad::Var cond);

/// Mean per-row norm of grad_x D(x, c) at `x`.
double critic_gradient_norm(const nets::DiscriminatorParams& d, const Tensor& x, const Tensor& cond);

// VAE stage.

/// Per-feature standardization fitted on training data. Constant features
/// keep unit scale.
struct FeatureScaler {
  Tensor mean;
  Tensor scale;

  static FeatureScaler fit(const Tensor& features);
  Tensor apply(const Tensor& raw) const;
  Tensor invert(const Tensor& standardized) const;
};

struct VaeModel {
  nets::VaeParams params;
  FeatureScaler scaler;

  /// Posterior mean of raw feature rows.
  Tensor encode_mean(const Tensor& raw) const;
  Tensor encode_sample(const Tensor& raw, std::mt19937_64& rng) const;
  /// Raw-space features for latent rows.
  Tensor decode(const Tensor& z) const;
};

struct VaeTrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 128;
  double kl_weight = 1e-4;
  std::vector<std::size_t> hidden = {512};
  std::size_t residual_blocks = 0;
  std::uint64_t seed = 0;
  AdamWConfig optimizer;

  void validate() const;
};

struct VaeTrainResult {
  VaeModel model;
  std::vector<double> loss_history;  // per-epoch mean loss
};

VaeTrainResult train_vae(const Tensor& features, const VaeTrainConfig& config, const VaeModel* init = nullptr);

/// Mean squared reconstruction error through the posterior mean, raw space.
double reconstruction_mse(const VaeModel& vae, const Tensor& features);
/// Mean over features of the per-feature variance.
double mean_feature_variance(const Tensor& features);

// GAN stage.

enum class Loss { bce, wgan_gp };
std::string to_string(Loss loss);
Loss parse_loss(const std::string& s);

/// Real latents with their conditions. Action data carries labels and is
/// conditioned through learnable tables; text data carries fixed vectors.
struct LatentData {
  data::ConditionKind kind = data::ConditionKind::action;
  Tensor latents;                    // [N x 256]
  std::vector<std::size_t> labels;   // action ids, or prompt groups for text
  Tensor text_conditions;            // [N x 768] for text
  std::size_t num_classes = 0;

  std::size_t size() const { return latents.rows(); }
  std::size_t cond_dim() const;
  void validate() const;
};

struct GanModel {
  data::ConditionKind kind = data::ConditionKind::action;
  nets::GeneratorParams g;
  nets::DiscriminatorParams d;
  // Separate action embedding tables for G and D; empty in text mode.
  Tensor g_embed;
  Tensor d_embed;

  /// Generator conditions for the given rows of `data` (or labels).
  Tensor generator_conditions(const std::vector<std::size_t>& labels) const;
  Tensor generate(const std::vector<std::size_t>& labels, std::mt19937_64& rng) const;
  Tensor generate(const Tensor& conditions, std::mt19937_64& rng) const;
};

struct GanTrainConfig {
  nets::Arch arch = nets::Arch::deep;
  Loss loss = Loss::wgan_gp;
  double lambda_gp = 10.0;
  std::size_t n_critic = 5;
  std::size_t batch_size = 64;
  std::size_t steps = 1000;  // generator steps
  std::size_t checkpoint_every = 100;
  std::uint64_t seed = 0;
  AdamWConfig g_optimizer;
  AdamWConfig d_optimizer;

  void validate() const;
};

GanModel make_gan(const GanTrainConfig& config, data::ConditionKind kind, std::size_t num_classes);

struct StepStats {
  std::size_t step = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double penalty = 0.0;
  std::optional<double> fid;
};

nlohmann::json to_json(const StepStats& s);

/// Complete mutable training state; resumable from its JSON form.
struct GanState {
  GanTrainConfig config;
  GanModel model;
  AdamWState g_opt;
  AdamWState d_opt;
  std::mt19937_64 rng;
  std::size_t step = 0;
};

GanState init_gan_state(const GanTrainConfig& config, const LatentData& data);

/// One discriminator step then one generator step (BCE).
StepStats bce_gan_step(GanState& state, const LatentData& data);
/// n_critic critic steps then one generator step (WGAN-GP).
StepStats wgan_gp_step(GanState& state, const LatentData& data);
StepStats gan_step(GanState& state, const LatentData& data);

struct Snapshot {
  std::size_t step = 0;
  double fid = 0.0;
};

struct GanTrainResult {
  std::vector<StepStats> log;
  std::vector<Snapshot> snapshots;
  std::size_t best_index = 0;
  GanModel best;
  GanState final_state;
};

using Validator = std::function<double(const GanModel&)>;
using CheckpointHook = std::function<void(const GanState&, const Snapshot&, bool is_best)>;
using StepHook = std::function<void(const StepStats&)>;

/// Runs `state` forward to config.steps, validating every checkpoint_every
/// steps and keeping the lowest-FID snapshot. `on_step` sees each log entry
/// before the checkpoint hook for the same step runs.
GanTrainResult train_gan(GanState state, const LatentData& data, const Validator& validate,
                         const CheckpointHook& on_checkpoint = {}, std::vector<Snapshot> prior_snapshots = {},
                         std::optional<GanModel> prior_best = std::nullopt, const StepHook& on_step = {});

/// Index of the minimum-FID snapshot (first on ties).
std::size_t select_best(const std::vector<Snapshot>& snapshots);

// Serialization.

nlohmann::json to_json(const AdamWConfig& c);
AdamWConfig adamw_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AdamWState& s);
AdamWState adamw_state_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FeatureScaler& s);
FeatureScaler feature_scaler_from_json(const nlohmann::json& j);
nlohmann::json to_json(const VaeModel& v);
VaeModel vae_model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GanTrainConfig& c);
GanTrainConfig gan_train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GanModel& m);
GanModel gan_model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GanState& s);
GanState gan_state_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Snapshot& s);
Snapshot snapshot_from_json(const nlohmann::json& j);

/// Row gather helper shared by training and evaluation.
Tensor gather_rows(const Tensor& m, const std::vector<std::size_t>& rows);
/// [B x K] one-hot rows for labels.
Tensor one_hot(const std::vector<std::size_t>& labels, std::size_t k);

}  // namespace lsgan::train
