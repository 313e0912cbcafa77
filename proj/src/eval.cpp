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


#include "lsgan/eval.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace lsgan::eval {

using nlohmann::json;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace {

Eigen::Map<const RowMatrix> as_matrix(const Tensor& t) {
  return Eigen::Map<const RowMatrix>(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                                     static_cast<Eigen::Index>(t.cols()));
}

Tensor from_matrix(const Matrix& m) {
  std::vector<double> out(static_cast<std::size_t>(m.size()));
  Eigen::Map<RowMatrix>(out.data(), m.rows(), m.cols()) = m;
  return Tensor::computed({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())}, std::move(out));
}

double row_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

nets::MlpSpec mlp(std::vector<std::size_t> widths, nets::FinalActivation final = nets::FinalActivation::none) {
  nets::MlpSpec s;
  s.widths = std::move(widths);
  s.final_activation = final;
  return s;
}

}  // namespace

// Evaluator

void EvaluatorConfig::validate() const {
  if (hidden == 0 || epochs == 0 || batch_size == 0) {
    throw std::invalid_argument("evaluator config: hidden, epochs and batch_size must be positive");
  }
  if (!(lr > 0.0)) throw std::invalid_argument("evaluator config: lr must be positive");
  if (!(margin >= 0.0)) throw std::invalid_argument("evaluator config: margin must be >= 0");
  if (!(min_accuracy >= 0.0 && min_accuracy <= 1.0)) {
    throw std::invalid_argument("evaluator config: min_accuracy must lie in [0, 1]");
  }
}

Tensor EvaluatorNet::logits(const Tensor& features) const {
  return nets::forward(classifier, nets::forward(trunk, scaler.apply(features)));
}

std::vector<std::size_t> EvaluatorNet::classify(const Tensor& features) const {
  const Tensor l = logits(features);
  std::vector<std::size_t> out(l.rows());
  for (std::size_t r = 0; r < l.rows(); ++r) {
    const auto row = l.row(r);
    out[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

Tensor EvaluatorNet::embed_motion(const Tensor& features) const {
  return nets::forward(motion_head, nets::forward(trunk, scaler.apply(features)));
}

Tensor EvaluatorNet::embed_condition(const Tensor& text_conditions) const {
  return nets::forward(cond_head, text_conditions);
}

Tensor action_text_conditions(const std::vector<std::size_t>& labels) {
  std::vector<double> out;
  out.reserve(labels.size() * data::kTextDim);
  std::map<std::size_t, Tensor> cache;
  for (auto l : labels) {
    auto it = cache.find(l);
    if (it == cache.end()) it = cache.emplace(l, data::embed_text(data::prompt_templates(l).front()).values).first;
    out.insert(out.end(), it->second.data().begin(), it->second.data().end());
  }
  return Tensor::computed({labels.size(), data::kTextDim}, std::move(out));
}

namespace {

Tensor condition_matrix(const std::vector<data::Sample>& samples) {
  std::vector<double> out;
  out.reserve(samples.size() * data::kTextDim);
  for (const auto& s : samples) out.insert(out.end(), s.condition.values.data().begin(), s.condition.values.data().end());
  return Tensor::computed({samples.size(), data::kTextDim}, std::move(out));
}

// Hinge contrastive loss over a batch: matched pairs pulled together,
// pairs with different labels pushed beyond `margin`.
ad::Var contrastive_loss(ad::Var m, ad::Var c, const std::vector<std::size_t>& labels, double margin) {
  auto& t = m.tape();
  const std::size_t b = labels.size();
  const ad::Var pulled = ad::mean(ad::sum_axis1(ad::square(m - c)));

  std::vector<double> mask(b * b, 0.0);
  double count = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      if (labels[i] != labels[j]) {
        mask[i * b + j] = 1.0;
        count += 1.0;
      }
    }
  }
  if (count == 0.0) return pulled;
  const ad::Var mm = ad::broadcast_cols(ad::sum_axis1(ad::square(m)), b);
  const ad::Var cc = ad::broadcast_rows(ad::reshape(ad::sum_axis1(ad::square(c)), {b}), b);
  const ad::Var sq = ad::clamp(mm + cc - ad::scale(ad::matmul_nt(m, c), 2.0), 1e-12, 1e12);
  const ad::Var hinge = ad::relu(ad::scale(ad::sqrt(sq), -1.0, margin));
  const ad::Var pushed = ad::scale(ad::sum(ad::mul(ad::square(hinge), t.constant(Tensor({b, b}, mask)))), 1.0 / count);
  return pulled + pushed;
}

}  // namespace

EvaluatorNet train_evaluator(const data::Dataset& dataset, const EvaluatorConfig& config) {
  config.validate();
  const std::size_t k = dataset.config.num_actions;
  std::vector<std::size_t> per_class(k, 0);
  for (const auto& s : dataset.train) {
    if (s.motion.action_id >= k) throw std::invalid_argument("evaluator: label out of range");
    ++per_class[s.motion.action_id];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (per_class[c] < 2) {
      throw std::invalid_argument("evaluator: action " + std::to_string(c) + " has " + std::to_string(per_class[c]) +
                                  " training samples; at least 2 per class are needed");
    }
  }
  if (dataset.test.empty()) throw std::invalid_argument("evaluator: empty held-out split");

  EvaluatorNet e;
  e.num_classes = k;
  const Tensor raw = data::feature_matrix(dataset.train);
  e.scaler = train::FeatureScaler::fit(raw);
  const Tensor x_all = e.scaler.apply(raw);
  const Tensor c_all = condition_matrix(dataset.train);
  const auto labels = data::labels_of(dataset.train);
  const std::uint64_t s = config.seed * 8;
  e.trunk = nets::init_params(mlp({raw.cols(), config.hidden, config.hidden}, nets::FinalActivation::leaky_relu), s + 1);
  e.classifier = nets::init_params(mlp({config.hidden, k}), s + 2);
  e.motion_head = nets::init_params(mlp({config.hidden, kEmbedDim}), s + 3);
  e.cond_head = nets::init_params(mlp({data::kTextDim, kEmbedDim}), s + 4);

  std::vector<nets::Network*> nets_ = {&e.trunk, &e.classifier, &e.motion_head, &e.cond_head};
  std::vector<Tensor> params;
  for (auto* n : nets_) params.insert(params.end(), n->params.begin(), n->params.end());
  train::AdamWConfig hyper;
  hyper.lr = config.lr;
  hyper.weight_decay = 0.0;
  auto opt = train::adamw_init(params, hyper);
  std::mt19937_64 rng(config.seed ^ 0x5bd1e995ULL);

  const std::size_t n = x_all.rows();
  std::vector<std::size_t> order(n);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + config.batch_size)));
      std::vector<std::size_t> y;
      for (auto i : idx) y.push_back(labels[i]);
      ad::Tape t;
      std::vector<nets::BoundNetwork> bound;
      std::vector<ad::Var> vars;
      for (auto* net : nets_) {
        bound.push_back(nets::bind(t, *net, true));
        vars.insert(vars.end(), bound.back().params.begin(), bound.back().params.end());
      }
      const ad::Var h = nets::forward(bound[0], t.constant(train::gather_rows(x_all, idx)));
      const ad::Var logits = nets::forward(bound[1], h);
      const ad::Var ce = ad::mean(ad::logsumexp_rows(logits) -
                                  ad::sum_axis1(ad::mul(logits, t.constant(train::one_hot(y, k)))));
      const ad::Var m = nets::forward(bound[2], h);
      const ad::Var c = nets::forward(bound[3], t.constant(train::gather_rows(c_all, idx)));
      const ad::Var loss = ce + contrastive_loss(m, c, y, config.margin);
      const auto g = ad::backward(loss, vars);
      std::vector<Tensor> grads;
      for (const auto& v : vars) grads.push_back(g[v]);
      adamw_update(params, grads, opt);
      std::size_t p = 0;
      for (auto* net : nets_) {
        for (auto& w : net->params) w = params[p++];
      }
    }
  }

  const auto predicted = e.classify(data::feature_matrix(dataset.test));
  const auto truth = data::labels_of(dataset.test);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  e.heldout_accuracy = static_cast<double>(hits) / static_cast<double>(truth.size());
  if (e.heldout_accuracy < config.min_accuracy) {
    throw std::runtime_error("evaluator: held-out accuracy " + std::to_string(e.heldout_accuracy) +
                             " is below the gate " + std::to_string(config.min_accuracy) +
                             "; review the corpus variation or the evaluator config");
  }
  return e;
}

json to_json(const EvaluatorNet& e) {
  return json{{"schema_version", 1},
              {"kind", "evaluator"},
              {"num_classes", e.num_classes},
              {"heldout_accuracy", e.heldout_accuracy},
              {"scaler", train::to_json(e.scaler)},
              {"trunk", nets::to_json(e.trunk)},
              {"classifier", nets::to_json(e.classifier)},
              {"motion_head", nets::to_json(e.motion_head)},
              {"cond_head", nets::to_json(e.cond_head)}};
}

EvaluatorNet evaluator_from_json(const json& j) {
  if (j.value("kind", "") != "evaluator") throw std::invalid_argument("evaluator file: wrong document kind");
  EvaluatorNet e;
  e.num_classes = j.at("num_classes").get<std::size_t>();
  e.heldout_accuracy = j.at("heldout_accuracy").get<double>();
  e.scaler = train::feature_scaler_from_json(j.at("scaler"));
  e.trunk = nets::network_from_json(j.at("trunk"));
  e.classifier = nets::network_from_json(j.at("classifier"));
  e.motion_head = nets::network_from_json(j.at("motion_head"));
  e.cond_head = nets::network_from_json(j.at("cond_head"));
  if (e.classifier.spec.out_dim() != e.num_classes) throw std::invalid_argument("evaluator file: class count mismatch");
  return e;
}

// Statistics

GaussianStats fit_gaussian(const Tensor& features) {
  if (features.rank() != 2 || features.rows() < 2) {
    throw std::invalid_argument("fit_gaussian: need at least 2 rows, got shape " + shape_str(features.shape()));
  }
  const auto x = as_matrix(features);
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const Matrix centered = x.rowwise() - mu;
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(features.rows() - 1);
  cov = 0.5 * (cov + cov.transpose()).eval();
  return {Tensor::computed({features.cols()}, std::vector<double>(mu.data(), mu.data() + mu.size())),
          from_matrix(cov)};
}

namespace {

Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  const std::size_t d = a.mean.size();
  if (b.mean.size() != d || a.covariance.rows() != d || a.covariance.cols() != d || b.covariance.rows() != d ||
      b.covariance.cols() != d) {
    throw std::invalid_argument("frechet_distance: dimension mismatch (" + std::to_string(d) + " vs " +
                                std::to_string(b.mean.size()) + ")");
  }
  const Matrix sa = as_matrix(a.covariance);
  const Matrix sb = as_matrix(b.covariance);
  const Matrix root_a = psd_sqrt(sa);
  Matrix inner = root_a * sb * root_a;
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(inner, Eigen::EigenvaluesOnly);
  double tr_sqrt = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double l = es.eigenvalues()[i];
    if (l > 1e-12) tr_sqrt += std::sqrt(l);
  }
  double mean_term = 0.0;
  for (std::size_t i = 0; i < d; ++i) mean_term += (a.mean[i] - b.mean[i]) * (a.mean[i] - b.mean[i]);
  return std::max(0.0, mean_term + sa.trace() + sb.trace() - 2.0 * tr_sqrt);
}

double fid(const Tensor& a, const Tensor& b) { return frechet_distance(fit_gaussian(a), fit_gaussian(b)); }

namespace {

std::pair<std::size_t, std::size_t> distinct_pair(std::size_t n, std::mt19937_64& rng) {
  const std::size_t i = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  std::size_t j = std::uniform_int_distribution<std::size_t>(0, n - 2)(rng);
  if (j >= i) ++j;
  return {i, j};
}

double mean_pair_distance(const Tensor& x, std::size_t n_pairs, std::mt19937_64& rng) {
  double s = 0.0;
  for (std::size_t p = 0; p < n_pairs; ++p) {
    const auto [i, j] = distinct_pair(x.rows(), rng);
    s += row_distance(x.row(i), x.row(j));
  }
  return s / static_cast<double>(n_pairs);
}

}  // namespace

double diversity(const Tensor& features, std::size_t n_pairs, std::mt19937_64& rng) {
  if (features.rank() != 2 || features.rows() < 2) throw std::invalid_argument("diversity: need at least 2 rows");
  if (n_pairs == 0) throw std::invalid_argument("diversity: n_pairs must be positive");
  return mean_pair_distance(features, n_pairs, rng);
}

double multimodality(const std::vector<Tensor>& groups, std::size_t n_pairs_per_group, std::mt19937_64& rng) {
  if (groups.empty()) throw std::invalid_argument("multimodality: no groups");
  if (n_pairs_per_group == 0) throw std::invalid_argument("multimodality: n_pairs must be positive");
  double s = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].rank() != 2 || groups[g].rows() < 2) {
      throw std::invalid_argument("multimodality: group " + std::to_string(g) + " has fewer than 2 rows");
    }
    s += mean_pair_distance(groups[g], n_pairs_per_group, rng);
  }
  return s / static_cast<double>(groups.size());
}

std::array<double, 3> r_precision(const Tensor& motion_embs, const Tensor& cond_embs, std::size_t pool_size,
                                  std::mt19937_64& rng) {
  if (motion_embs.shape() != cond_embs.shape()) {
    throw std::invalid_argument("r_precision: motion " + shape_str(motion_embs.shape()) + " vs condition " +
                                shape_str(cond_embs.shape()));
  }
  const std::size_t n = motion_embs.rows();
  if (pool_size < 2 || n < pool_size) {
    throw std::invalid_argument("r_precision: need at least pool_size=" + std::to_string(pool_size) + " rows, got " +
                                std::to_string(n));
  }
  // Group rows by identical condition embedding.
  std::map<std::vector<double>, std::size_t> ids;
  std::vector<std::size_t> group(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = cond_embs.row(i);
    group[i] = ids.emplace(std::vector<double>(row.begin(), row.end()), ids.size()).first->second;
  }
  std::map<std::size_t, std::vector<std::size_t>> others;
  std::array<double, 3> hits{0, 0, 0};
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < n; ++i) {
    auto it = others.find(group[i]);
    if (it == others.end()) {
      std::vector<std::size_t> cand;
      for (std::size_t j = 0; j < n; ++j) {
        if (group[j] != group[i]) cand.push_back(j);
      }
      it = others.emplace(group[i], std::move(cand)).first;
    }
    std::vector<std::size_t>& cand = it->second;
    if (cand.size() < pool_size - 1) {
      throw std::invalid_argument("r_precision: fewer than pool_size - 1 rows with a different condition");
    }
    // Partial Fisher-Yates draws pool_size - 1 distinct mismatches.
    for (std::size_t k = 0; k + 1 < pool_size; ++k) {
      const std::size_t r = std::uniform_int_distribution<std::size_t>(k, cand.size() - 1)(rng);
      std::swap(cand[k], cand[r]);
    }
    const double d_true = row_distance(motion_embs.row(i), cond_embs.row(i));
    std::size_t rank = 1;
    for (std::size_t k = 0; k + 1 < pool_size; ++k) {
      if (row_distance(motion_embs.row(i), cond_embs.row(cand[k])) < d_true) ++rank;
    }
    for (std::size_t k = 0; k < 3; ++k) hits[k] += rank <= k + 1 ? 1.0 : 0.0;
  }
  for (auto& h : hits) h /= static_cast<double>(n);
  return hits;
}

double mm_dist(const Tensor& motion_embs, const Tensor& cond_embs) {
  if (motion_embs.shape() != cond_embs.shape() || motion_embs.rows() == 0) {
    throw std::invalid_argument("mm_dist: motion " + shape_str(motion_embs.shape()) + " vs condition " +
                                shape_str(cond_embs.shape()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < motion_embs.rows(); ++i) s += row_distance(motion_embs.row(i), cond_embs.row(i));
  return s / static_cast<double>(motion_embs.rows());
}

// APE / AVE

std::array<double, 8> ApeAve::values() const {
  return {ape_root, ape_traj, ape_mean_pose, ape_mean_joints, ave_root, ave_traj, ave_mean_pose, ave_mean_joints};
}

const std::array<const char*, 8>& ApeAve::names() {
  static const std::array<const char*, 8> n = {"APE_root", "APE_traj", "APE_mean_pose", "APE_mean_joints",
                                               "AVE_root", "AVE_traj", "AVE_mean_pose", "AVE_mean_joints"};
  return n;
}

namespace {

using data::Joint;
using data::kJoints;

double temporal_variance(const data::MotionSequence& m, std::size_t joint, std::size_t axis, bool relative) {
  const std::size_t t_count = m.length;
  double mean = 0.0;
  std::vector<double> v(t_count);
  for (std::size_t t = 0; t < t_count; ++t) {
    v[t] = m.at(t, joint)[axis] - (relative ? m.at(t, Joint::root)[axis] : 0.0);
    mean += v[t];
  }
  mean /= static_cast<double>(t_count);
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(t_count - 1);
}

double ave_block(const data::MotionSequence& g, const data::MotionSequence& r, const std::vector<std::size_t>& joints,
                 const std::vector<std::size_t>& axes, bool relative) {
  double total = 0.0;
  for (auto j : joints) {
    for (auto a : axes) total += std::abs(temporal_variance(g, j, a, relative) - temporal_variance(r, j, a, relative));
  }
  return total / static_cast<double>(joints.size());
}

}  // namespace

ApeAve ape_ave(const data::MotionSequence& generated, const data::MotionSequence& reference) {
  const auto valid = [](const data::MotionSequence& m) { return m.positions.size() == m.length * kJoints * 3; };
  if (!valid(generated) || !valid(reference)) throw std::invalid_argument("ape_ave: joint-count mismatch");
  if (generated.length != reference.length) {
    throw std::invalid_argument("ape_ave: frame counts differ (" + std::to_string(generated.length) + " vs " +
                                std::to_string(reference.length) + "); resample first");
  }
  if (generated.length < 2) throw std::invalid_argument("ape_ave: need at least 2 frames");
  const std::size_t t_count = generated.length;
  ApeAve out;
  for (std::size_t t = 0; t < t_count; ++t) {
    const data::Vec3 gr = generated.at(t, Joint::root), rr = reference.at(t, Joint::root);
    out.ape_root += std::sqrt((gr[0] - rr[0]) * (gr[0] - rr[0]) + (gr[1] - rr[1]) * (gr[1] - rr[1]) +
                              (gr[2] - rr[2]) * (gr[2] - rr[2]));
    out.ape_traj += std::sqrt((gr[0] - rr[0]) * (gr[0] - rr[0]) + (gr[2] - rr[2]) * (gr[2] - rr[2]));
    for (std::size_t j = 0; j < kJoints; ++j) {
      const data::Vec3 g = generated.at(t, j), r = reference.at(t, j);
      double abs_sq = 0.0, rel_sq = 0.0;
      for (std::size_t a = 0; a < 3; ++a) {
        abs_sq += (g[a] - r[a]) * (g[a] - r[a]);
        const double d = (g[a] - gr[a]) - (r[a] - rr[a]);
        rel_sq += d * d;
      }
      out.ape_mean_joints += std::sqrt(abs_sq);
      if (j != Joint::root) out.ape_mean_pose += std::sqrt(rel_sq);
    }
  }
  const double tc = static_cast<double>(t_count);
  out.ape_root /= tc;
  out.ape_traj /= tc;
  out.ape_mean_joints /= tc * kJoints;
  out.ape_mean_pose /= tc * (kJoints - 1);

  std::vector<std::size_t> all(kJoints), non_root;
  std::iota(all.begin(), all.end(), 0);
  for (auto j : all) {
    if (j != Joint::root) non_root.push_back(j);
  }
  out.ave_root = ave_block(generated, reference, {Joint::root}, {0, 1, 2}, false);
  out.ave_traj = ave_block(generated, reference, {Joint::root}, {0, 2}, false);
  out.ave_mean_pose = ave_block(generated, reference, non_root, {0, 1, 2}, true);
  out.ave_mean_joints = ave_block(generated, reference, all, {0, 1, 2}, false);
  return out;
}

double action_accuracy(const EvaluatorNet& evaluator, const Tensor& features,
                       const std::vector<std::size_t>& intended_labels) {
  if (intended_labels.empty() || features.empty()) throw std::invalid_argument("action_accuracy: empty input");
  if (features.rows() != intended_labels.size()) {
    throw std::invalid_argument("action_accuracy: " + std::to_string(features.rows()) + " rows vs " +
                                std::to_string(intended_labels.size()) + " labels");
  }
  const auto predicted = evaluator.classify(features);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == intended_labels[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

// FLOPs

std::string to_string(LayerKind k) {
  switch (k) {
    case LayerKind::linear: return "linear";
    case LayerKind::activation: return "activation";
    case LayerKind::residual_add: return "residual_add";
  }
  return "?";
}

LayerKind parse_layer_kind(const std::string& s) {
  if (s == "linear") return LayerKind::linear;
  if (s == "activation") return LayerKind::activation;
  if (s == "residual_add") return LayerKind::residual_add;
  throw std::invalid_argument("unknown layer kind '" + s + "'");
}

std::vector<LayerOp> layer_ops(const nets::MlpSpec& spec, const std::string& prefix) {
  spec.validate();
  std::vector<LayerOp> ops;
  const std::size_t n_linear = spec.widths.size() - 1;
  for (std::size_t i = 0; i < n_linear; ++i) {
    const std::string tag = prefix + ".fc" + std::to_string(i);
    ops.push_back({LayerKind::linear, spec.widths[i], spec.widths[i + 1], tag});
    const bool last = i + 1 == n_linear;
    if (!last || spec.final_activation != nets::FinalActivation::none) {
      ops.push_back({LayerKind::activation, 0, spec.widths[i + 1], tag + ".act"});
    }
    if (i == 0) {
      const std::size_t w = spec.widths[1];
      for (std::size_t r = 0; r < spec.residual_blocks; ++r) {
        const std::string rt = prefix + ".res" + std::to_string(r);
        ops.push_back({LayerKind::linear, w, w, rt + ".fc_a"});
        ops.push_back({LayerKind::activation, 0, w, rt + ".act"});
        ops.push_back({LayerKind::linear, w, w, rt + ".fc_b"});
        ops.push_back({LayerKind::residual_add, 0, w, rt + ".add"});
      }
    }
  }
  return ops;
}

FlopCount count_flops(const std::vector<LayerOp>& ops, std::size_t batch, bool macs) {
  if (batch == 0) throw std::invalid_argument("count_flops: batch must be positive");
  FlopCount f;
  const double b = static_cast<double>(batch);
  for (const auto& op : ops) {
    double per = 0.0;
    switch (op.kind) {
      case LayerKind::linear: {
        const double in = static_cast<double>(op.in), out = static_cast<double>(op.out);
        per = (macs ? 1.0 : 2.0) * in * out + out;
        break;
      }
      case LayerKind::activation:
      case LayerKind::residual_add:
        per = static_cast<double>(op.out);
        break;
      default:
        throw std::invalid_argument("count_flops: unknown layer kind");
    }
    f.layers.emplace_back(op.name, per * b);
    f.total += per * b;
  }
  return f;
}

FlopCount count_flops(const nets::MlpSpec& spec, std::size_t batch, bool macs) {
  return count_flops(layer_ops(spec, "net"), batch, macs);
}

FlopCount generation_flops(nets::Arch arch, std::size_t cond_dim, const nets::VaeConfig& vae, std::size_t batch,
                           bool macs) {
  auto ops = layer_ops(nets::generator_spec(arch, cond_dim), "generator");
  const auto decoder = layer_ops(nets::make_vae(vae, 0).decoder.spec, "decoder");
  ops.insert(ops.end(), decoder.begin(), decoder.end());
  return count_flops(ops, batch, macs);
}

json to_json(const FlopCount& f) {
  json layers = json::array();
  for (const auto& [name, v] : f.layers) layers.push_back(json{{"name", name}, {"flops", v}});
  return json{{"total", f.total}, {"layers", layers}};
}

std::vector<LayerOp> layer_ops_from_json(const json& j) {
  std::vector<LayerOp> ops;
  for (const auto& e : j) {
    LayerOp op;
    op.kind = parse_layer_kind(e.at("kind").get<std::string>());
    op.in = e.value("in", std::size_t{0});
    op.out = e.at("out").get<std::size_t>();
    op.name = e.value("name", to_string(op.kind));
    ops.push_back(op);
  }
  return ops;
}

// Projection

Projection pca_project(const Tensor& latents, const std::vector<std::size_t>& labels) {
  if (latents.rank() != 2 || latents.rows() < 3) throw std::invalid_argument("pca_project: need at least 3 rows");
  if (labels.size() != latents.rows()) throw std::invalid_argument("pca_project: one label per row required");
  const auto x = as_matrix(latents);
  const Matrix centered = x.rowwise() - x.colwise().mean();
  const Matrix cov = (centered.transpose() * centered) / static_cast<double>(latents.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  const Eigen::Index d = cov.rows();
  const double top = std::max(es.eigenvalues()[d - 1], 0.0);
  Matrix axes = Matrix::Zero(d, 2);
  for (Eigen::Index k = 0; k < 2 && k < d; ++k) {
    const Eigen::Index idx = d - 1 - k;
    if (es.eigenvalues()[idx] <= 1e-12 * std::max(top, 1.0)) continue;  // degenerate: leave zero
    Eigen::VectorXd v = es.eigenvectors().col(idx);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    axes.col(k) = v;
  }
  return {from_matrix(centered * axes), labels};
}

double silhouette(const Tensor& points, const std::vector<std::size_t>& labels) {
  const std::size_t n = points.rows();
  if (labels.size() != n || n < 2) throw std::invalid_argument("silhouette: need matching labels and >= 2 points");
  std::map<std::size_t, std::size_t> sizes;
  for (auto l : labels) ++sizes[l];
  if (sizes.size() < 2) throw std::invalid_argument("silhouette: need at least 2 clusters");
  double total = 0.0;
  std::map<std::size_t, double> sums;
  for (std::size_t i = 0; i < n; ++i) {
    if (sizes[labels[i]] == 1) continue;  // singleton scores 0
    sums.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sums[labels[j]] += row_distance(points.row(i), points.row(j));
    }
    const double a = sums[labels[i]] / static_cast<double>(sizes[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [l, s] : sums) {
      if (l != labels[i]) b = std::min(b, s / static_cast<double>(sizes[l]));
    }
    const double m = std::max(a, b);
    total += m > 0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(n);
}

Summary summarize(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("summarize: no values");
  Summary s;
  s.n = values.size();
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (s.n > 1) {
    double var = 0.0;
    for (double v : values) var += (v - s.mean) * (v - s.mean);
    var /= static_cast<double>(s.n - 1);
    s.ci95 = 1.96 * std::sqrt(var) / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

json to_json(const Summary& s) {
  json j{{"mean", s.mean}, {"n", s.n}};
  if (s.ci95) j["ci95"] = *s.ci95;
  return j;
}

}  // namespace lsgan::eval
