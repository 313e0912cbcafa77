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

#include "lsgan/nets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lsgan::nets {

using nlohmann::json;

std::string to_string(Arch arch) { return arch == Arch::vanilla ? "vanilla" : "deep"; }
std::string to_string(Head head) { return head == Head::logit ? "logit" : "critic"; }

Arch parse_arch(const std::string& s) {
  if (s == "vanilla") return Arch::vanilla;
  if (s == "deep") return Arch::deep;
  throw std::invalid_argument("unknown architecture '" + s + "' (expected vanilla|deep)");
}

Head parse_head(const std::string& s) {
  if (s == "logit") return Head::logit;
  if (s == "critic") return Head::critic;
  throw std::invalid_argument("unknown discriminator head '" + s + "' (expected logit|critic)");
}

void MlpSpec::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("mlp spec: need at least 2 widths");
  for (auto w : widths) {
    if (w == 0) throw std::invalid_argument("mlp spec: widths must be positive");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("mlp spec: leaky slope must lie in (0, 1)");
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.size();
  return n;
}

LinearLayer Network::layer(std::size_t i) const {
  if (2 * i + 1 >= params.size()) throw std::out_of_range("network: layer index out of range");
  return {params[2 * i], params[2 * i + 1]};
}

namespace {

// Linear layer shapes in execution order.
std::vector<std::pair<std::size_t, std::size_t>> layer_shapes(const MlpSpec& spec) {
  std::vector<std::pair<std::size_t, std::size_t>> shapes;  // (in, out)
  for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
    shapes.emplace_back(spec.widths[i], spec.widths[i + 1]);
    if (i == 0) {
      for (std::size_t r = 0; r < 2 * spec.residual_blocks; ++r) shapes.emplace_back(spec.widths[1], spec.widths[1]);
    }
  }
  return shapes;
}

ad::Var linear(ad::Var x, ad::Var weight, ad::Var bias) {
  return ad::broadcast_add_bias(ad::matmul_nt(x, weight), bias);
}

ad::Var as_batch(ad::Var x) {
  if (x.value().rank() == 1) return ad::reshape(x, {1, x.value().size()});
  return x;
}

void check_width(const char* what, const Tensor& t, std::size_t expected) {
  if (t.cols() != expected) {
    throw std::invalid_argument(std::string(what) + ": expected width " + std::to_string(expected) + ", got " +
                                shape_str(t.shape()));
  }
}

}  // namespace

Network init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  Network net{spec, {}};
  for (auto [in, out] : layer_shapes(spec)) {
    const double bound = std::sqrt(1.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<double> w(in * out);
    for (auto& v : w) v = u(rng);
    net.params.push_back(Tensor({out, in}, std::move(w)));
    net.params.push_back(Tensor::zeros({out}));
  }
  return net;
}

BoundNetwork bind(ad::Tape& tape, const Network& net, bool trainable) {
  BoundNetwork b{&net.spec, {}};
  b.params.reserve(net.params.size());
  for (const auto& p : net.params) b.params.push_back(trainable ? tape.leaf(p) : tape.constant(p));
  return b;
}

ad::Var forward(const BoundNetwork& net, ad::Var x) {
  const MlpSpec& spec = *net.spec;
  check_width("mlp forward", x.value(), spec.in_dim());
  const std::size_t n_linear = spec.widths.size() - 1;
  std::size_t p = 0;
  auto next_linear = [&](ad::Var h) {
    ad::Var out = linear(h, net.params[p], net.params[p + 1]);
    p += 2;
    return out;
  };
  ad::Var h = as_batch(x);
  for (std::size_t i = 0; i < n_linear; ++i) {
    h = next_linear(h);
    const bool last = i + 1 == n_linear;
    if (!last) {
      h = ad::leaky_relu(h, spec.alpha);
    } else if (spec.final_activation == FinalActivation::sigmoid) {
      h = ad::sigmoid(h);
    } else if (spec.final_activation == FinalActivation::leaky_relu) {
      h = ad::leaky_relu(h, spec.alpha);
    }
    if (i == 0) {
      for (std::size_t r = 0; r < spec.residual_blocks; ++r) {
        ad::Var inner = ad::leaky_relu(next_linear(h), spec.alpha);
        h = ad::add(h, next_linear(inner));
      }
    }
  }
  return h;
}

Tensor forward(const Network& net, const Tensor& x) {
  ad::Tape tape;
  return forward(bind(tape, net, false), tape.constant(x)).value();
}

MlpSpec generator_spec(Arch arch, std::size_t cond_dim) {
  MlpSpec s;
  s.widths = {kNoiseDim + cond_dim, 512, 512, kLatentDim};
  s.residual_blocks = arch == Arch::deep ? 2 : 0;
  return s;
}

MlpSpec discriminator_spec(Arch arch, std::size_t cond_dim) {
  MlpSpec s;
  s.widths = {kLatentDim + cond_dim, 512, 256, 128, 1};
  s.residual_blocks = arch == Arch::deep ? 2 : 0;
  return s;
}

GeneratorParams make_generator(Arch arch, std::size_t cond_dim, std::uint64_t seed) {
  return {arch, kNoiseDim, cond_dim, kLatentDim, init_params(generator_spec(arch, cond_dim), seed)};
}

DiscriminatorParams make_discriminator(Arch arch, Head head, std::size_t cond_dim, std::uint64_t seed) {
  return {arch, head, kLatentDim, cond_dim, init_params(discriminator_spec(arch, cond_dim), seed)};
}

ad::Var generator_forward(const BoundNetwork& g, ad::Var z, ad::Var c) {
  return forward(g, ad::concat(as_batch(z), as_batch(c)));
}

Tensor generator_forward(const GeneratorParams& g, const Tensor& z, const Tensor& c) {
  check_width("generator noise", z, g.noise_dim);
  check_width("generator condition", c, g.cond_dim);
  ad::Tape tape;
  return generator_forward(bind(tape, g.net, false), tape.constant(z), tape.constant(c)).value();
}

ad::Var discriminator_forward(const BoundNetwork& d, ad::Var latent, ad::Var c) {
  return forward(d, ad::concat(as_batch(latent), as_batch(c)));
}

Tensor discriminator_forward(const DiscriminatorParams& d, const Tensor& latent, const Tensor& c) {
  check_width("discriminator latent", latent, d.latent_dim);
  check_width("discriminator condition", c, d.cond_dim);
  ad::Tape tape;
  return discriminator_forward(bind(tape, d.net, false), tape.constant(latent), tape.constant(c)).value();
}

VaeParams make_vae(const VaeConfig& config, std::uint64_t seed) {
  if (config.feature_dim == 0 || config.latent_dim == 0 || config.hidden.empty()) {
    throw std::invalid_argument("vae config: feature_dim, latent_dim and hidden widths must be set");
  }
  MlpSpec enc;
  enc.widths = {config.feature_dim};
  enc.widths.insert(enc.widths.end(), config.hidden.begin(), config.hidden.end());
  enc.residual_blocks = config.residual_blocks;
  enc.final_activation = FinalActivation::leaky_relu;

  MlpSpec head;
  head.widths = {config.hidden.back(), config.latent_dim};

  MlpSpec dec;
  dec.widths = {config.latent_dim};
  dec.widths.insert(dec.widths.end(), config.hidden.rbegin(), config.hidden.rend());
  dec.widths.push_back(config.feature_dim);
  dec.residual_blocks = config.residual_blocks;

  return {config, init_params(enc, seed), init_params(head, seed + 1), init_params(head, seed + 2),
          init_params(dec, seed + 3)};
}

BoundVae bind(ad::Tape& tape, const VaeParams& vae, bool trainable) {
  return {bind(tape, vae.encoder, trainable), bind(tape, vae.mu_head, trainable),
          bind(tape, vae.logvar_head, trainable), bind(tape, vae.decoder, trainable)};
}

std::pair<ad::Var, ad::Var> vae_encode(const BoundVae& v, ad::Var features) {
  ad::Var h = forward(v.encoder, features);
  return {forward(v.mu_head, h), ad::clamp(forward(v.logvar_head, h), kLogvarMin, kLogvarMax)};
}

Posterior vae_encode(const VaeParams& v, const Tensor& features) {
  ad::Tape tape;
  auto [mu, logvar] = vae_encode(bind(tape, v, false), tape.constant(features));
  return {mu.value(), logvar.value()};
}

ad::Var vae_decode(const BoundVae& v, ad::Var z) { return forward(v.decoder, z); }

Tensor vae_decode(const VaeParams& v, const Tensor& z) {
  ad::Tape tape;
  return vae_decode(bind(tape, v, false), tape.constant(z)).value();
}

ad::Var reparameterize(ad::Var mu, ad::Var logvar, const Tensor& eps) {
  if (mu.shape() != logvar.shape() || mu.shape() != eps.shape()) {
    throw std::invalid_argument("reparameterize: mu, logvar and eps shapes differ");
  }
  ad::Var std_dev = ad::exp(ad::scale(ad::clamp(logvar, kLogvarMin, kLogvarMax), 0.5));
  return ad::add(mu, ad::mul(std_dev, mu.tape().constant(eps)));
}

Tensor reparameterize(const Tensor& mu, const Tensor& logvar, std::mt19937_64& rng) {
  ad::Tape tape;
  return reparameterize(tape.constant(mu), tape.constant(logvar), standard_normal(mu.shape(), rng)).value();
}

Tensor standard_normal(Shape shape, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = n(rng);
  return Tensor::computed(std::move(shape), std::move(v));
}

std::vector<Tensor*> parameter_list(VaeParams& vae) {
  std::vector<Tensor*> out;
  for (Network* n : {&vae.encoder, &vae.mu_head, &vae.logvar_head, &vae.decoder}) {
    for (auto& p : n->params) out.push_back(&p);
  }
  return out;
}

std::vector<const Tensor*> parameter_list(const VaeParams& vae) {
  std::vector<const Tensor*> out;
  for (const Network* n : {&vae.encoder, &vae.mu_head, &vae.logvar_head, &vae.decoder}) {
    for (const auto& p : n->params) out.push_back(&p);
  }
  return out;
}

std::vector<ad::Var> parameter_vars(const BoundVae& vae) {
  std::vector<ad::Var> out;
  for (const BoundNetwork* n : {&vae.encoder, &vae.mu_head, &vae.logvar_head, &vae.decoder}) {
    out.insert(out.end(), n->params.begin(), n->params.end());
  }
  return out;
}

json to_json(const Tensor& t) { return json{{"shape", t.shape()}, {"data", t.values()}}; }

Tensor tensor_from_json(const json& j) {
  return Tensor(j.at("shape").get<Shape>(), j.at("data").get<std::vector<double>>());
}

namespace {

std::string final_name(FinalActivation f) {
  switch (f) {
    case FinalActivation::none: return "none";
    case FinalActivation::sigmoid: return "sigmoid";
    case FinalActivation::leaky_relu: return "leaky_relu";
  }
  return "none";
}

FinalActivation parse_final(const std::string& s) {
  if (s == "none") return FinalActivation::none;
  if (s == "sigmoid") return FinalActivation::sigmoid;
  if (s == "leaky_relu") return FinalActivation::leaky_relu;
  throw std::invalid_argument("unknown final activation '" + s + "'");
}

}  // namespace

json to_json(const MlpSpec& spec) {
  return json{{"widths", spec.widths},
              {"residual_blocks", spec.residual_blocks},
              {"alpha", spec.alpha},
              {"final_activation", final_name(spec.final_activation)}};
}

MlpSpec mlp_spec_from_json(const json& j) {
  MlpSpec s;
  s.widths = j.at("widths").get<std::vector<std::size_t>>();
  s.residual_blocks = j.at("residual_blocks").get<std::size_t>();
  s.alpha = j.at("alpha").get<double>();
  s.final_activation = parse_final(j.at("final_activation").get<std::string>());
  s.validate();
  return s;
}

json to_json(const Network& net) {
  json params = json::array();
  for (const auto& p : net.params) params.push_back(to_json(p));
  return json{{"spec", to_json(net.spec)}, {"params", params}};
}

Network network_from_json(const json& j) {
  Network net{mlp_spec_from_json(j.at("spec")), {}};
  for (const auto& p : j.at("params")) net.params.push_back(tensor_from_json(p));
  const auto shapes = layer_shapes(net.spec);
  if (net.params.size() != 2 * shapes.size()) throw std::invalid_argument("network json: wrong parameter count");
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto [in, out] = shapes[i];
    if (net.params[2 * i].shape() != Shape{out, in} || net.params[2 * i + 1].shape() != Shape{out}) {
      throw std::invalid_argument("network json: layer " + std::to_string(i) + " has inconsistent shapes");
    }
  }
  return net;
}

json to_json(const GeneratorParams& g) {
  return json{{"architecture", to_string(g.arch)},
              {"noise_dim", g.noise_dim},
              {"cond_dim", g.cond_dim},
              {"out_dim", g.out_dim},
              {"net", to_json(g.net)}};
}

GeneratorParams generator_from_json(const json& j) {
  GeneratorParams g{parse_arch(j.at("architecture")), j.at("noise_dim"), j.at("cond_dim"), j.at("out_dim"),
                    network_from_json(j.at("net"))};
  if (g.net.spec.in_dim() != g.noise_dim + g.cond_dim || g.net.spec.out_dim() != g.out_dim) {
    throw std::invalid_argument("generator json: widths disagree with declared dimensions");
  }
  return g;
}

json to_json(const DiscriminatorParams& d) {
  return json{{"architecture", to_string(d.arch)},
              {"head", to_string(d.head)},
              {"latent_dim", d.latent_dim},
              {"cond_dim", d.cond_dim},
              {"net", to_json(d.net)}};
}

DiscriminatorParams discriminator_from_json(const json& j) {
  DiscriminatorParams d{parse_arch(j.at("architecture")), parse_head(j.at("head")), j.at("latent_dim"),
                        j.at("cond_dim"), network_from_json(j.at("net"))};
  if (d.net.spec.in_dim() != d.latent_dim + d.cond_dim || d.net.spec.out_dim() != 1) {
    throw std::invalid_argument("discriminator json: widths disagree with declared dimensions");
  }
  return d;
}

json to_json(const VaeParams& v) {
  return json{{"feature_dim", v.config.feature_dim},
              {"hidden", v.config.hidden},
              {"latent_dim", v.config.latent_dim},
              {"residual_blocks", v.config.residual_blocks},
              {"encoder", to_json(v.encoder)},
              {"mu_head", to_json(v.mu_head)},
              {"logvar_head", to_json(v.logvar_head)},
              {"decoder", to_json(v.decoder)}};
}

VaeParams vae_from_json(const json& j) {
  VaeParams v;
  v.config.feature_dim = j.at("feature_dim");
  v.config.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  v.config.latent_dim = j.at("latent_dim");
  v.config.residual_blocks = j.at("residual_blocks");
  v.encoder = network_from_json(j.at("encoder"));
  v.mu_head = network_from_json(j.at("mu_head"));
  v.logvar_head = network_from_json(j.at("logvar_head"));
  v.decoder = network_from_json(j.at("decoder"));
  if (v.mu_head.spec.out_dim() != v.logvar_head.spec.out_dim() ||
      v.decoder.spec.out_dim() != v.config.feature_dim) {
    throw std::invalid_argument("vae json: head or decoder widths disagree");
  }
  return v;
}

}  // namespace lsgan::nets
