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

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsgan/autodiff.hpp"
#include "lsgan/tensor.hpp"

namespace lsgan::nets {

inline constexpr std::size_t kNoiseDim = 100;
inline constexpr std::size_t kLatentDim = 256;
inline constexpr std::size_t kTextCondDim = 768;
inline constexpr std::size_t kActionCondDim = 10;
inline constexpr double kLeakySlope = 0.2;

enum class Arch { vanilla, deep };
enum class Head { logit, critic };
enum class FinalActivation { none, sigmoid, leaky_relu };

std::string to_string(Arch arch);
std::string to_string(Head head);
Arch parse_arch(const std::string& s);
Head parse_head(const std::string& s);

struct LinearLayer {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]
};

/// Fully connected stack. Hidden layers use leaky ReLU; `residual_blocks`
/// blocks of width widths[1] are inserted after the first hidden layer.
struct MlpSpec {
  std::vector<std::size_t> widths;
  std::size_t residual_blocks = 0;
  double alpha = kLeakySlope;
  FinalActivation final_activation = FinalActivation::none;

  void validate() const;
  std::size_t in_dim() const { return widths.front(); }
  std::size_t out_dim() const { return widths.back(); }
  std::size_t linear_layer_count() const { return widths.size() - 1 + 2 * residual_blocks; }
};

/// An MLP's parameters in declared layer order: weight then bias for each
/// linear layer, residual inner layers in execution position.
struct Network {
  MlpSpec spec;
  std::vector<Tensor> params;

  std::size_t parameter_count() const;
  LinearLayer layer(std::size_t i) const;
};

Network init_params(const MlpSpec& spec, std::uint64_t seed);

/// Parameters bound to a tape, either as trainable leaves or as constants.
struct BoundNetwork {
  const MlpSpec* spec = nullptr;
  std::vector<ad::Var> params;
};

BoundNetwork bind(ad::Tape& tape, const Network& net, bool trainable);
ad::Var forward(const BoundNetwork& net, ad::Var x);
Tensor forward(const Network& net, const Tensor& x);

struct GeneratorParams {
  Arch arch = Arch::vanilla;
  std::size_t noise_dim = kNoiseDim;
  std::size_t cond_dim = kTextCondDim;
  std::size_t out_dim = kLatentDim;
  Network net;
};

struct DiscriminatorParams {
  Arch arch = Arch::vanilla;
  Head head = Head::logit;
  std::size_t latent_dim = kLatentDim;
  std::size_t cond_dim = kTextCondDim;
  Network net;
};

MlpSpec generator_spec(Arch arch, std::size_t cond_dim);
MlpSpec discriminator_spec(Arch arch, std::size_t cond_dim);
GeneratorParams make_generator(Arch arch, std::size_t cond_dim, std::uint64_t seed);
DiscriminatorParams make_discriminator(Arch arch, Head head, std::size_t cond_dim, std::uint64_t seed);

/// z' = G([z, c]). Accepts a single row or a batch.
ad::Var generator_forward(const BoundNetwork& g, ad::Var z, ad::Var c);
Tensor generator_forward(const GeneratorParams& g, const Tensor& z, const Tensor& c);

/// Raw score D([latent, c]): a logit for the BCE head (the sigmoid lives in
/// the loss), an unbounded critic value for the Wasserstein head.
ad::Var discriminator_forward(const BoundNetwork& d, ad::Var latent, ad::Var c);
Tensor discriminator_forward(const DiscriminatorParams& d, const Tensor& latent, const Tensor& c);

struct VaeConfig {
  std::size_t feature_dim = 0;
  std::vector<std::size_t> hidden = {512};
  std::size_t latent_dim = kLatentDim;
  std::size_t residual_blocks = 0;
};

struct VaeParams {
  VaeConfig config;
  Network encoder;  // feature_dim -> hidden, activated output
  Network mu_head;
  Network logvar_head;
  Network decoder;  // latent -> hidden -> feature_dim
};

VaeParams make_vae(const VaeConfig& config, std::uint64_t seed);

struct BoundVae {
  BoundNetwork encoder, mu_head, logvar_head, decoder;
};

BoundVae bind(ad::Tape& tape, const VaeParams& vae, bool trainable);

struct Posterior {
  Tensor mu;
  Tensor logvar;
};

inline constexpr double kLogvarMin = -20.0;
inline constexpr double kLogvarMax = 20.0;

std::pair<ad::Var, ad::Var> vae_encode(const BoundVae& v, ad::Var features);
Posterior vae_encode(const VaeParams& v, const Tensor& features);
ad::Var vae_decode(const BoundVae& v, ad::Var z);
Tensor vae_decode(const VaeParams& v, const Tensor& z);

/// z = mu + exp(logvar / 2) * eps with logvar clamped to [-20, 20].
ad::Var reparameterize(ad::Var mu, ad::Var logvar, const Tensor& eps);
Tensor reparameterize(const Tensor& mu, const Tensor& logvar, std::mt19937_64& rng);
Tensor standard_normal(Shape shape, std::mt19937_64& rng);

/// Flat parameter list across all sub-networks of a VAE, in checkpoint order.
std::vector<Tensor*> parameter_list(VaeParams& vae);
std::vector<const Tensor*> parameter_list(const VaeParams& vae);
std::vector<ad::Var> parameter_vars(const BoundVae& vae);

// Checkpoint serialization. Arrays are flat, row-major, in declared order.
nlohmann::json to_json(const MlpSpec& spec);
MlpSpec mlp_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GeneratorParams& g);
GeneratorParams generator_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DiscriminatorParams& d);
DiscriminatorParams discriminator_from_json(const nlohmann::json& j);
nlohmann::json to_json(const VaeParams& v);
VaeParams vae_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Tensor& t);
Tensor tensor_from_json(const nlohmann::json& j);

}  // namespace lsgan::nets
