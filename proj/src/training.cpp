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


#include "lsgan/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace lsgan::train {

using nlohmann::json;

Tensor gather_rows(const Tensor& m, const std::vector<std::size_t>& rows) {
  const std::size_t w = m.cols();
  std::vector<double> out;
  out.reserve(rows.size() * w);
  for (auto r : rows) {
    if (r >= m.rows()) throw std::out_of_range("gather_rows: row " + std::to_string(r) + " of " + shape_str(m.shape()));
    const auto src = m.row(r);
    out.insert(out.end(), src.begin(), src.end());
  }
  return Tensor::computed({rows.size(), w}, std::move(out));
}

Tensor one_hot(const std::vector<std::size_t>& labels, std::size_t k) {
  std::vector<double> out(labels.size() * k, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= k) throw std::out_of_range("one_hot: label " + std::to_string(labels[i]) + " >= " + std::to_string(k));
    out[i * k + labels[i]] = 1.0;
  }
  return Tensor::computed({labels.size(), k}, std::move(out));
}

// AdamW

AdamWState adamw_init(const std::vector<Tensor>& params, const AdamWConfig& hyper) {
  AdamWState s;
  s.hyper = hyper;
  for (const auto& p : params) {
    s.m.push_back(Tensor::zeros(p.shape()));
    s.v.push_back(Tensor::zeros(p.shape()));
  }
  return s;
}

void adamw_update(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamWState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adamw: " + std::to_string(params.size()) + " params, " +
                                std::to_string(grads.size()) + " grads, " + std::to_string(state.m.size()) +
                                " moment slots");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != grads[i].shape() || params[i].shape() != state.m[i].shape()) {
      throw std::invalid_argument("adamw: shape mismatch at parameter " + std::to_string(i) + ": " +
                                  shape_str(params[i].shape()) + " vs grad " + shape_str(grads[i].shape()));
    }
  }
  const auto& h = state.hyper;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(h.beta1, t);
  const double bc2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].to_vector();
    auto m = state.m[i].to_vector();
    auto v = state.v[i].to_vector();
    const auto g = grads[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = h.beta1 * m[k] + (1.0 - h.beta1) * g[k];
      v[k] = h.beta2 * v[k] + (1.0 - h.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      p[k] = p[k] - h.lr * (m_hat / (std::sqrt(v_hat) + h.eps)) - h.lr * h.weight_decay * p[k];
    }
    const Shape shape = params[i].shape();
    params[i] = Tensor(shape, std::move(p));
    state.m[i] = Tensor::computed(shape, std::move(m));
    state.v[i] = Tensor::computed(shape, std::move(v));
  }
}

// Objectives

ad::Var kl_divergence(ad::Var mu, ad::Var logvar) {
  if (mu.shape() != logvar.shape()) {
    throw std::invalid_argument("kl_divergence: mu " + shape_str(mu.shape()) + " vs logvar " +
                                shape_str(logvar.shape()));
  }
  const double batch = static_cast<double>(mu.value().rows());
  const ad::Var inner = ad::scale(logvar, 1.0, 1.0) - ad::square(mu) - ad::exp(logvar);
  return ad::scale(ad::sum(inner), -0.5 / batch);
}

double kl_divergence(const Tensor& mu, const Tensor& logvar) {
  ad::Tape t;
  return kl_divergence(t.constant(mu), t.constant(logvar)).value().item();
}

ad::Var vae_loss(ad::Var x, ad::Var x_hat, ad::Var mu, ad::Var logvar, double kl_weight) {
  if (x.shape() != x_hat.shape()) {
    throw std::invalid_argument("vae_loss: x " + shape_str(x.shape()) + " vs x_hat " + shape_str(x_hat.shape()));
  }
  return ad::mean(ad::square(x_hat - x)) + ad::scale(kl_divergence(mu, logvar), kl_weight);
}

double vae_loss(const Tensor& x, const Tensor& x_hat, const Tensor& mu, const Tensor& logvar, double kl_weight) {
  ad::Tape t;
  return vae_loss(t.constant(x), t.constant(x_hat), t.constant(mu), t.constant(logvar), kl_weight).value().item();
}

ad::Var bce_discriminator_loss(ad::Var real_logits, ad::Var fake_logits) {
  auto& t = real_logits.tape();
  return ad::bce_with_logits(real_logits, t.constant(Tensor::full(real_logits.shape(), 1.0))) +
         ad::bce_with_logits(fake_logits, t.constant(Tensor::zeros(fake_logits.shape())));
}

ad::Var bce_generator_loss(ad::Var fake_logits) {
  return ad::bce_with_logits(fake_logits, fake_logits.tape().constant(Tensor::full(fake_logits.shape(), 1.0)));
}

namespace {

// Keeps sqrt differentiable at a zero gradient.
constexpr double kNormFloor = 1e-12;

Tensor interpolate(const Tensor& real, const Tensor& fake, const Tensor& eps) {
  const std::size_t b = real.rows(), w = real.cols();
  std::vector<double> out(b * w);
  for (std::size_t i = 0; i < b; ++i) {
    const double e = eps[i];
    for (std::size_t k = 0; k < w; ++k) out[i * w + k] = e * real.at(i, k) + (1.0 - e) * fake.at(i, k);
  }
  return Tensor::computed({b, w}, std::move(out));
}

}  // namespace

CriticLoss wgan_gp_critic_loss(const nets::BoundNetwork& d, const Tensor& real, const Tensor& fake, ad::Var cond,
                               double lambda_gp, const Tensor& eps) {
  if (real.shape() != fake.shape()) {
    throw std::invalid_argument("wgan_gp_critic_loss: real " + shape_str(real.shape()) + " vs fake " +
                                shape_str(fake.shape()));
  }
  if (eps.size() != real.rows()) throw std::invalid_argument("wgan_gp_critic_loss: one eps per row required");
  auto& t = cond.tape();
  const ad::Var d_real = nets::discriminator_forward(d, t.constant(real), cond);
  const ad::Var d_fake = nets::discriminator_forward(d, t.constant(fake), cond);
  const ad::Var gap = ad::mean(d_fake) - ad::mean(d_real);

  const ad::Var x_hat = t.leaf(interpolate(real, fake, eps));
  const ad::Var grad = ad::grad_wrt_input(ad::sum(nets::discriminator_forward(d, x_hat, cond)), x_hat);
  const ad::Var norms = ad::sqrt(ad::scale(ad::sum_axis1(ad::square(grad)), 1.0, kNormFloor));
  const ad::Var penalty = ad::scale(ad::mean(ad::square(ad::scale(norms, 1.0, -1.0))), lambda_gp);
  return {gap + penalty, penalty, gap};
}

CriticLoss wgan_gp_critic_loss(const nets::BoundNetwork& d, const Tensor& real, const Tensor& fake, ad::Var cond,
                               double lambda_gp, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> eps(real.rows());
  for (auto& e : eps) e = u(rng);
  return wgan_gp_critic_loss(d, real, fake, cond, lambda_gp, Tensor::vector(std::move(eps)));
}

ad::Var wgan_generator_loss(const nets::BoundNetwork& d, ad::Var fake, ad::Var cond) {
  return ad::scale(ad::mean(nets::discriminator_forward(d, fake, cond)), -1.0);
}

double critic_gradient_norm(const nets::DiscriminatorParams& d, const Tensor& x, const Tensor& cond) {
  ad::Tape t;
  const auto bd = nets::bind(t, d.net, false);
  const ad::Var xv = t.leaf(x);
  const auto grads = ad::backward(ad::sum(nets::discriminator_forward(bd, xv, t.constant(cond))), {xv});
  const Tensor& g = grads[xv];
  double total = 0.0;
  for (std::size_t r = 0; r < g.rows(); ++r) {
    double s = 0.0;
    for (double v : g.row(r)) s += v * v;
    total += std::sqrt(s);
  }
  return total / static_cast<double>(g.rows());
}

// VAE stage

FeatureScaler FeatureScaler::fit(const Tensor& features) {
  const std::size_t n = features.rows(), w = features.cols();
  if (n == 0) throw std::invalid_argument("feature scaler: empty feature matrix");
  std::vector<double> mean(w, 0.0), scale(w, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < w; ++c) mean[c] += features.at(r, c);
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const double d = features.at(r, c) - mean[c];
      scale[c] += d * d;
    }
  }
  for (auto& s : scale) {
    s = std::sqrt(s / static_cast<double>(n));
    if (s < 1e-8) s = 1.0;
  }
  return {Tensor::vector(std::move(mean)), Tensor::vector(std::move(scale))};
}

Tensor FeatureScaler::apply(const Tensor& raw) const {
  if (raw.cols() != mean.size()) throw std::invalid_argument("feature scaler: width " + std::to_string(raw.cols()));
  const std::size_t w = raw.cols();
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (raw[i] - mean[i % w]) / scale[i % w];
  return Tensor::computed({raw.rows(), w}, std::move(out));
}

Tensor FeatureScaler::invert(const Tensor& standardized) const {
  if (standardized.cols() != mean.size()) {
    throw std::invalid_argument("feature scaler: width " + std::to_string(standardized.cols()));
  }
  const std::size_t w = standardized.cols();
  std::vector<double> out(standardized.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = standardized[i] * scale[i % w] + mean[i % w];
  return Tensor::computed({standardized.rows(), w}, std::move(out));
}

Tensor VaeModel::encode_mean(const Tensor& raw) const { return nets::vae_encode(params, scaler.apply(raw)).mu; }

Tensor VaeModel::encode_sample(const Tensor& raw, std::mt19937_64& rng) const {
  const auto post = nets::vae_encode(params, scaler.apply(raw));
  return nets::reparameterize(post.mu, post.logvar, rng);
}

Tensor VaeModel::decode(const Tensor& z) const { return scaler.invert(nets::vae_decode(params, z)); }

void VaeTrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("vae config: epochs must be positive");
  if (batch_size == 0) throw std::invalid_argument("vae config: batch_size must be positive");
  if (!(kl_weight >= 0.0)) throw std::invalid_argument("vae config: kl_weight must be >= 0");
  if (hidden.empty()) throw std::invalid_argument("vae config: hidden must list at least one width");
  if (!(optimizer.lr >= 0.0)) throw std::invalid_argument("vae config: lr must be >= 0");
}

namespace {

std::vector<Tensor> snapshot_params(const std::vector<Tensor*>& ptrs) {
  std::vector<Tensor> out;
  out.reserve(ptrs.size());
  for (auto* p : ptrs) out.push_back(*p);
  return out;
}

void restore_params(const std::vector<Tensor*>& ptrs, std::vector<Tensor>& values) {
  for (std::size_t i = 0; i < ptrs.size(); ++i) *ptrs[i] = std::move(values[i]);
}

std::vector<Tensor> gradients(const ad::GradientMap& g, const std::vector<ad::Var>& vars) {
  std::vector<Tensor> out;
  out.reserve(vars.size());
  for (const auto& v : vars) out.push_back(g[v]);
  return out;
}

}  // namespace

VaeTrainResult train_vae(const Tensor& features, const VaeTrainConfig& config, const VaeModel* init) {
  config.validate();
  if (features.rank() != 2 || features.rows() == 0) throw std::invalid_argument("train_vae: empty dataset");
  VaeTrainResult result;
  if (init) {
    result.model = *init;
  } else {
    result.model.scaler = FeatureScaler::fit(features);
    nets::VaeConfig vc;
    vc.feature_dim = features.cols();
    vc.hidden = config.hidden;
    vc.residual_blocks = config.residual_blocks;
    result.model.params = nets::make_vae(vc, config.seed);
  }
  auto& vae = result.model.params;
  const Tensor x_all = result.model.scaler.apply(features);
  const auto ptrs = nets::parameter_list(vae);
  AdamWState opt = adamw_init(snapshot_params(ptrs), config.optimizer);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  const std::size_t n = x_all.rows();
  std::vector<std::size_t> order(n);
  for (std::size_t e = 0; e < config.epochs; ++e) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + config.batch_size)));
      ad::Tape t;
      const auto bv = nets::bind(t, vae, true);
      const ad::Var x = t.constant(gather_rows(x_all, idx));
      const auto [mu, logvar] = nets::vae_encode(bv, x);
      const Tensor eps = nets::standard_normal(mu.shape(), rng);
      const ad::Var x_hat = nets::vae_decode(bv, nets::reparameterize(mu, logvar, eps));
      const ad::Var loss = vae_loss(x, x_hat, mu, logvar, config.kl_weight);
      total += loss.value().item() * static_cast<double>(idx.size());
      const auto vars = nets::parameter_vars(bv);
      const auto grads = gradients(ad::backward(loss, vars), vars);
      auto values = snapshot_params(ptrs);
      adamw_update(values, grads, opt);
      restore_params(ptrs, values);
    }
    result.loss_history.push_back(total / static_cast<double>(n));
  }
  return result;
}

double reconstruction_mse(const VaeModel& vae, const Tensor& features) {
  const Tensor rec = vae.decode(vae.encode_mean(features));
  double s = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) s += (rec[i] - features[i]) * (rec[i] - features[i]);
  return s / static_cast<double>(rec.size());
}

double mean_feature_variance(const Tensor& features) {
  const auto scaler = FeatureScaler::fit(features);
  const std::size_t n = features.rows(), w = features.cols();
  double total = 0.0;
  for (std::size_t c = 0; c < w; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = features.at(r, c) - scaler.mean[c];
      s += d * d;
    }
    total += s / static_cast<double>(n);
  }
  return total / static_cast<double>(w);
}

// GAN stage

std::string to_string(Loss loss) { return loss == Loss::bce ? "bce" : "wgan_gp"; }

Loss parse_loss(const std::string& s) {
  if (s == "bce") return Loss::bce;
  if (s == "wgan_gp") return Loss::wgan_gp;
  throw std::invalid_argument("unknown loss '" + s + "' (expected bce|wgan_gp)");
}

std::size_t LatentData::cond_dim() const {
  return kind == data::ConditionKind::action ? nets::kActionCondDim : nets::kTextCondDim;
}

void LatentData::validate() const {
  if (latents.rank() != 2 || latents.rows() == 0) throw std::invalid_argument("latent data: no latents");
  if (latents.cols() != nets::kLatentDim) {
    throw std::invalid_argument("latent data: latent width " + std::to_string(latents.cols()) + ", expected 256");
  }
  if (labels.size() != latents.rows()) throw std::invalid_argument("latent data: one label per latent required");
  for (auto l : labels) {
    if (l >= num_classes) throw std::invalid_argument("latent data: label " + std::to_string(l) + " out of range");
  }
  if (kind == data::ConditionKind::text &&
      (text_conditions.rows() != latents.rows() || text_conditions.cols() != nets::kTextCondDim)) {
    throw std::invalid_argument("latent data: text conditions must be [N x 768]");
  }
}

Tensor GanModel::generator_conditions(const std::vector<std::size_t>& labels) const {
  if (kind != data::ConditionKind::action) {
    throw std::invalid_argument("gan model: label conditions need an action-conditioned model");
  }
  return gather_rows(g_embed, labels);
}

Tensor GanModel::generate(const Tensor& conditions, std::mt19937_64& rng) const {
  const Tensor z = nets::standard_normal({conditions.rows(), g.noise_dim}, rng);
  return nets::generator_forward(g, z, conditions);
}

Tensor GanModel::generate(const std::vector<std::size_t>& labels, std::mt19937_64& rng) const {
  return generate(generator_conditions(labels), rng);
}

void GanTrainConfig::validate() const {
  if (!(lambda_gp >= 0.0)) throw std::invalid_argument("gan config: lambda_gp must be >= 0");
  if (n_critic == 0) throw std::invalid_argument("gan config: n_critic must be >= 1");
  if (batch_size == 0) throw std::invalid_argument("gan config: batch_size must be positive");
  if (steps == 0) throw std::invalid_argument("gan config: steps must be positive");
}

GanModel make_gan(const GanTrainConfig& config, data::ConditionKind kind, std::size_t num_classes) {
  GanModel m;
  m.kind = kind;
  const std::size_t cd = kind == data::ConditionKind::action ? nets::kActionCondDim : nets::kTextCondDim;
  const auto head = config.loss == Loss::bce ? nets::Head::logit : nets::Head::critic;
  m.g = nets::make_generator(config.arch, cd, config.seed * 4 + 1);
  m.d = nets::make_discriminator(config.arch, head, cd, config.seed * 4 + 2);
  if (kind == data::ConditionKind::action) {
    m.g_embed = data::identity_embedding_table(num_classes, config.seed * 4 + 3).table;
    m.d_embed = m.g_embed;
  }
  return m;
}

nlohmann::json to_json(const StepStats& s) {
  json j{{"step", s.step}, {"d_loss", s.d_loss}, {"g_loss", s.g_loss}, {"penalty", s.penalty}};
  if (s.fid) j["fid"] = *s.fid;
  return j;
}

namespace {

bool is_action(const GanModel& m) { return m.kind == data::ConditionKind::action; }

std::vector<Tensor> g_trainables(const GanModel& m) {
  auto out = m.g.net.params;
  if (is_action(m)) out.push_back(m.g_embed);
  return out;
}

std::vector<Tensor> d_trainables(const GanModel& m) {
  auto out = m.d.net.params;
  if (is_action(m)) out.push_back(m.d_embed);
  return out;
}

void set_g_trainables(GanModel& m, std::vector<Tensor> v) {
  if (is_action(m)) {
    m.g_embed = std::move(v.back());
    v.pop_back();
  }
  m.g.net.params = std::move(v);
}

void set_d_trainables(GanModel& m, std::vector<Tensor> v) {
  if (is_action(m)) {
    m.d_embed = std::move(v.back());
    v.pop_back();
  }
  m.d.net.params = std::move(v);
}

std::vector<std::size_t> sample_batch(std::size_t n, std::size_t b, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> u(0, n - 1);
  std::vector<std::size_t> idx(b);
  for (auto& i : idx) i = u(rng);
  return idx;
}

std::vector<std::size_t> labels_at(const LatentData& data, const std::vector<std::size_t>& idx) {
  std::vector<std::size_t> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(data.labels[i]);
  return out;
}

// Fixed condition tensor for one network (table rows, or the text vectors).
Tensor condition_tensor(const LatentData& data, const Tensor& table, const std::vector<std::size_t>& idx) {
  if (data.kind == data::ConditionKind::action) return gather_rows(table, labels_at(data, idx));
  return gather_rows(data.text_conditions, idx);
}

// Trainable condition path: one-hot rows times the table leaf.
ad::Var condition_var(ad::Tape& t, const LatentData& data, ad::Var table, const std::vector<std::size_t>& idx) {
  if (data.kind == data::ConditionKind::action) {
    return ad::matmul(t.constant(one_hot(labels_at(data, idx), data.num_classes)), table);
  }
  return t.constant(gather_rows(data.text_conditions, idx));
}

struct BoundSide {
  nets::BoundNetwork net;
  ad::Var table;
  std::vector<ad::Var> vars;
};

BoundSide bind_side(ad::Tape& t, const nets::Network& net, const Tensor& table, bool action) {
  BoundSide s;
  s.net = nets::bind(t, net, true);
  s.vars = s.net.params;
  if (action) {
    s.table = t.leaf(table);
    s.vars.push_back(s.table);
  }
  return s;
}

Tensor fake_batch(const GanModel& m, const LatentData& data, const std::vector<std::size_t>& idx,
                  std::mt19937_64& rng) {
  const Tensor z = nets::standard_normal({idx.size(), m.g.noise_dim}, rng);
  return nets::generator_forward(m.g, z, condition_tensor(data, m.g_embed, idx));
}

void step_d(GanState& s, const std::vector<Tensor>& grads) {
  auto params = d_trainables(s.model);
  adamw_update(params, grads, s.d_opt);
  set_d_trainables(s.model, std::move(params));
}

void step_g(GanState& s, const std::vector<Tensor>& grads) {
  auto params = g_trainables(s.model);
  adamw_update(params, grads, s.g_opt);
  set_g_trainables(s.model, std::move(params));
}

// Generator update shared by both losses; returns the pre-update loss.
double generator_step(GanState& s, const LatentData& data) {
  auto& m = s.model;
  const auto idx = sample_batch(data.size(), s.config.batch_size, s.rng);
  const Tensor z = nets::standard_normal({idx.size(), m.g.noise_dim}, s.rng);
  ad::Tape t;
  const auto g = bind_side(t, m.g.net, m.g_embed, is_action(m));
  const auto d = nets::bind(t, m.d.net, false);
  const ad::Var c_g = condition_var(t, data, g.table, idx);
  const ad::Var c_d = t.constant(condition_tensor(data, m.d_embed, idx));
  const ad::Var fake = nets::generator_forward(g.net, t.constant(z), c_g);
  const ad::Var loss = s.config.loss == Loss::bce
                           ? bce_generator_loss(nets::discriminator_forward(d, fake, c_d))
                           : wgan_generator_loss(d, fake, c_d);
  const double value = loss.value().item();
  step_g(s, gradients(ad::backward(loss, g.vars), g.vars));
  return value;
}

void check_batch(const GanState& s, const LatentData& data) {
  if (s.config.batch_size == 0) throw std::invalid_argument("gan step: batch size 0");
  data.validate();
  if (data.kind != s.model.kind) throw std::invalid_argument("gan step: condition kind mismatch");
}

}  // namespace

GanState init_gan_state(const GanTrainConfig& config, const LatentData& data) {
  config.validate();
  data.validate();
  GanState s;
  s.config = config;
  s.model = make_gan(config, data.kind, data.num_classes);
  s.g_opt = adamw_init(g_trainables(s.model), config.g_optimizer);
  s.d_opt = adamw_init(d_trainables(s.model), config.d_optimizer);
  s.rng.seed(config.seed);
  return s;
}

StepStats bce_gan_step(GanState& s, const LatentData& data) {
  check_batch(s, data);
  auto& m = s.model;
  StepStats stats;
  {
    const auto idx = sample_batch(data.size(), s.config.batch_size, s.rng);
    const Tensor fake = fake_batch(m, data, idx, s.rng);
    ad::Tape t;
    const auto d = bind_side(t, m.d.net, m.d_embed, is_action(m));
    const ad::Var c = condition_var(t, data, d.table, idx);
    const ad::Var loss = bce_discriminator_loss(
        nets::discriminator_forward(d.net, t.constant(gather_rows(data.latents, idx)), c),
        nets::discriminator_forward(d.net, t.constant(fake), c));
    stats.d_loss = loss.value().item();
    step_d(s, gradients(ad::backward(loss, d.vars), d.vars));
  }
  stats.g_loss = generator_step(s, data);
  stats.step = ++s.step;
  return stats;
}

StepStats wgan_gp_step(GanState& s, const LatentData& data) {
  check_batch(s, data);
  auto& m = s.model;
  StepStats stats;
  for (std::size_t k = 0; k < s.config.n_critic; ++k) {
    const auto idx = sample_batch(data.size(), s.config.batch_size, s.rng);
    const Tensor fake = fake_batch(m, data, idx, s.rng);
    ad::Tape t;
    const auto d = bind_side(t, m.d.net, m.d_embed, is_action(m));
    const ad::Var c = condition_var(t, data, d.table, idx);
    const auto loss = wgan_gp_critic_loss(d.net, gather_rows(data.latents, idx), fake, c, s.config.lambda_gp, s.rng);
    stats.d_loss += loss.loss.value().item();
    stats.penalty += loss.penalty.value().item();
    step_d(s, gradients(ad::backward(loss.loss, d.vars), d.vars));
  }
  stats.d_loss /= static_cast<double>(s.config.n_critic);
  stats.penalty /= static_cast<double>(s.config.n_critic);
  stats.g_loss = generator_step(s, data);
  stats.step = ++s.step;
  return stats;
}

StepStats gan_step(GanState& state, const LatentData& data) {
  return state.config.loss == Loss::bce ? bce_gan_step(state, data) : wgan_gp_step(state, data);
}

std::size_t select_best(const std::vector<Snapshot>& snapshots) {
  if (snapshots.empty()) throw std::invalid_argument("select_best: no snapshots recorded");
  std::size_t best = 0;
  for (std::size_t i = 1; i < snapshots.size(); ++i) {
    if (snapshots[i].fid < snapshots[best].fid) best = i;
  }
  return best;
}

GanTrainResult train_gan(GanState state, const LatentData& data, const Validator& validate,
                         const CheckpointHook& on_checkpoint, std::vector<Snapshot> prior_snapshots,
                         std::optional<GanModel> prior_best, const StepHook& on_step) {
  state.config.validate();
  data.validate();
  GanTrainResult r;
  r.snapshots = std::move(prior_snapshots);
  std::optional<GanModel> best = std::move(prior_best);
  if (!r.snapshots.empty() && !best) throw std::invalid_argument("train_gan: prior snapshots given without a best model");
  double best_fid = r.snapshots.empty() ? std::numeric_limits<double>::infinity()
                                        : r.snapshots[select_best(r.snapshots)].fid;
  const std::size_t every = state.config.checkpoint_every;
  while (state.step < state.config.steps) {
    StepStats stats = gan_step(state, data);
    if (every > 0 && state.step % every == 0) {
      const Snapshot snap{state.step, validate ? validate(state.model) : 0.0};
      stats.fid = snap.fid;
      r.snapshots.push_back(snap);
      const bool is_best = !best || snap.fid < best_fid;
      if (is_best) {
        best = state.model;
        best_fid = snap.fid;
      }
      r.log.push_back(stats);
      if (on_step) on_step(stats);
      if (on_checkpoint) on_checkpoint(state, snap, is_best);
      continue;
    }
    r.log.push_back(stats);
    if (on_step) on_step(stats);
  }
  if (!r.snapshots.empty()) r.best_index = select_best(r.snapshots);
  r.best = best ? *best : state.model;
  r.final_state = std::move(state);
  return r;
}

// Serialization

nlohmann::json to_json(const AdamWConfig& c) {
  return json{{"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps}, {"weight_decay", c.weight_decay}};
}

AdamWConfig adamw_config_from_json(const nlohmann::json& j) {
  AdamWConfig c;
  c.lr = j.at("lr").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.eps = j.at("eps").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  return c;
}

namespace {

json tensors_to_json(const std::vector<Tensor>& ts) {
  json a = json::array();
  for (const auto& t : ts) a.push_back(nets::to_json(t));
  return a;
}

std::vector<Tensor> tensors_from_json(const json& j) {
  std::vector<Tensor> out;
  for (const auto& e : j) out.push_back(nets::tensor_from_json(e));
  return out;
}

}  // namespace

nlohmann::json to_json(const AdamWState& s) {
  return json{{"hyper", to_json(s.hyper)}, {"step", s.step}, {"m", tensors_to_json(s.m)}, {"v", tensors_to_json(s.v)}};
}

AdamWState adamw_state_from_json(const nlohmann::json& j) {
  AdamWState s;
  s.hyper = adamw_config_from_json(j.at("hyper"));
  s.step = j.at("step").get<std::uint64_t>();
  s.m = tensors_from_json(j.at("m"));
  s.v = tensors_from_json(j.at("v"));
  if (s.m.size() != s.v.size()) throw std::invalid_argument("adamw state: moment lists differ in length");
  return s;
}

nlohmann::json to_json(const FeatureScaler& s) {
  return json{{"mean", nets::to_json(s.mean)}, {"scale", nets::to_json(s.scale)}};
}

FeatureScaler feature_scaler_from_json(const nlohmann::json& j) {
  return {nets::tensor_from_json(j.at("mean")), nets::tensor_from_json(j.at("scale"))};
}

nlohmann::json to_json(const VaeModel& v) {
  return json{{"schema_version", 1}, {"kind", "vae"}, {"params", nets::to_json(v.params)}, {"scaler", to_json(v.scaler)}};
}

VaeModel vae_model_from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "vae") throw std::invalid_argument("vae checkpoint: wrong document kind");
  VaeModel v{nets::vae_from_json(j.at("params")), feature_scaler_from_json(j.at("scaler"))};
  if (v.scaler.mean.size() != v.params.config.feature_dim) {
    throw std::invalid_argument("vae checkpoint: scaler width does not match feature_dim");
  }
  return v;
}

nlohmann::json to_json(const GanTrainConfig& c) {
  return json{{"arch", nets::to_string(c.arch)},
              {"loss", to_string(c.loss)},
              {"lambda_gp", c.lambda_gp},
              {"n_critic", c.n_critic},
              {"batch_size", c.batch_size},
              {"steps", c.steps},
              {"checkpoint_every", c.checkpoint_every},
              {"seed", c.seed},
              {"g_optimizer", to_json(c.g_optimizer)},
              {"d_optimizer", to_json(c.d_optimizer)}};
}

GanTrainConfig gan_train_config_from_json(const nlohmann::json& j) {
  GanTrainConfig c;
  c.arch = nets::parse_arch(j.at("arch").get<std::string>());
  c.loss = parse_loss(j.at("loss").get<std::string>());
  c.lambda_gp = j.at("lambda_gp").get<double>();
  c.n_critic = j.at("n_critic").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.steps = j.at("steps").get<std::size_t>();
  c.checkpoint_every = j.at("checkpoint_every").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.g_optimizer = adamw_config_from_json(j.at("g_optimizer"));
  c.d_optimizer = adamw_config_from_json(j.at("d_optimizer"));
  c.validate();
  return c;
}

nlohmann::json to_json(const GanModel& m) {
  json j{{"schema_version", 1},
         {"kind", "gan"},
         {"condition", data::to_string(m.kind)},
         {"generator", nets::to_json(m.g)},
         {"discriminator", nets::to_json(m.d)}};
  if (is_action(m)) {
    j["g_embed"] = nets::to_json(m.g_embed);
    j["d_embed"] = nets::to_json(m.d_embed);
  }
  return j;
}

GanModel gan_model_from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "gan") throw std::invalid_argument("gan checkpoint: wrong document kind");
  GanModel m;
  m.kind = data::parse_condition_kind(j.at("condition").get<std::string>());
  m.g = nets::generator_from_json(j.at("generator"));
  m.d = nets::discriminator_from_json(j.at("discriminator"));
  if (is_action(m)) {
    m.g_embed = nets::tensor_from_json(j.at("g_embed"));
    m.d_embed = nets::tensor_from_json(j.at("d_embed"));
    if (m.g_embed.cols() != nets::kActionCondDim || m.d_embed.shape() != m.g_embed.shape()) {
      throw std::invalid_argument("gan checkpoint: embedding tables must be [K x 10]");
    }
  }
  if (m.g.cond_dim != m.d.cond_dim) throw std::invalid_argument("gan checkpoint: G/D condition widths differ");
  return m;
}

nlohmann::json to_json(const GanState& s) {
  std::ostringstream rng;
  rng << s.rng;
  return json{{"schema_version", 1},
              {"kind", "gan_state"},
              {"config", to_json(s.config)},
              {"model", to_json(s.model)},
              {"g_opt", to_json(s.g_opt)},
              {"d_opt", to_json(s.d_opt)},
              {"rng", rng.str()},
              {"step", s.step}};
}

GanState gan_state_from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "gan_state") throw std::invalid_argument("gan state: wrong document kind");
  GanState s;
  s.config = gan_train_config_from_json(j.at("config"));
  s.model = gan_model_from_json(j.at("model"));
  s.g_opt = adamw_state_from_json(j.at("g_opt"));
  s.d_opt = adamw_state_from_json(j.at("d_opt"));
  std::istringstream rng(j.at("rng").get<std::string>());
  rng >> s.rng;
  if (!rng) throw std::invalid_argument("gan state: unreadable rng state");
  s.step = j.at("step").get<std::size_t>();
  if (s.g_opt.m.size() != g_trainables(s.model).size() || s.d_opt.m.size() != d_trainables(s.model).size()) {
    throw std::invalid_argument("gan state: optimizer slots do not match the model");
  }
  return s;
}

nlohmann::json to_json(const Snapshot& s) { return json{{"step", s.step}, {"fid", s.fid}}; }

Snapshot snapshot_from_json(const nlohmann::json& j) {
  return {j.at("step").get<std::size_t>(), j.at("fid").get<double>()};
}

}  // namespace lsgan::train
