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


#include "lsgan/pipeline.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace lsgan::pipeline {

using nlohmann::json;

namespace {

// Strict reader for one config object: every key must be consumed.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw std::invalid_argument("config: " + where() + " must be an object");
  }

  template <class T>
  void opt(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    const json& v = j_.at(key);
    const std::string name = field(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw std::invalid_argument("config: " + name + " must be a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) throw std::invalid_argument("config: " + name + " must be a non-negative integer");
      out = v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw std::invalid_argument("config: " + name + " must be a number");
      out = v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw std::invalid_argument("config: " + name + " must be a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
      if (!v.is_array()) throw std::invalid_argument("config: " + name + " must be an array");
      out.clear();
      for (const auto& e : v) {
        if (!e.is_number_unsigned()) throw std::invalid_argument("config: " + name + " entries must be integers");
        out.push_back(e.get<std::size_t>());
      }
    } else {
      static_assert(sizeof(T) == 0, "unsupported config field type");
    }
  }

  template <class T, class Parse>
  void opt_enum(const char* key, T& out, Parse parse) {
    std::string s;
    opt(key, s);
    if (!j_.contains(key)) return;
    try {
      out = parse(s);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config: " + field(key) + ": " + e.what());
    }
  }

  std::optional<Fields> child(const char* key) {
    if (!j_.contains(key)) return std::nullopt;
    seen_.insert(key);
    return Fields(j_.at(key), field(key));
  }

  void done() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw std::invalid_argument("config: unknown key '" + field(k.c_str()) + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "top level" : path_; }
  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string real_latents_name(RealLatents r) { return r == RealLatents::mean ? "mean" : "sample"; }

RealLatents parse_real_latents(const std::string& s) {
  if (s == "mean") return RealLatents::mean;
  if (s == "sample") return RealLatents::sample;
  throw std::invalid_argument("unknown real_latents '" + s + "' (expected mean|sample)");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::mt19937_64 seeded(std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

void log_line(const std::string& s) { std::cerr << "[lsgan] " << s << std::endl; }

}  // namespace

// Config

void RunConfig::validate() const {
  try {
    if (out_dir.empty()) throw std::invalid_argument("out_dir must be set");
    dataset_config().validate();
    vae_config().validate();
    if (!(vae.weight_decay >= 0.0)) throw std::invalid_argument("vae.weight_decay must be >= 0");
    gan_config().validate();
    if (!(gan.lr >= 0.0)) throw std::invalid_argument("gan.lr must be >= 0");
    if (!(gan.weight_decay >= 0.0)) throw std::invalid_argument("gan.weight_decay must be >= 0");
    if (eval.repetitions == 0) throw std::invalid_argument("eval.repetitions must be >= 1");
    if (eval.pool_size < 2) throw std::invalid_argument("eval.pool_size must be >= 2");
    if (eval.diversity_pairs == 0) throw std::invalid_argument("eval.diversity_pairs must be >= 1");
    if (eval.mm_samples < 2) throw std::invalid_argument("eval.mm_samples must be >= 2");
    if (eval.mm_pairs == 0) throw std::invalid_argument("eval.mm_pairs must be >= 1");
    eval.evaluator.validate();
    const auto n_test = dataset.num_actions * dataset.n_per_action -
                        dataset.num_actions * static_cast<std::size_t>(std::llround(
                                                  dataset.split_ratio * static_cast<double>(dataset.n_per_action)));
    if (n_test < eval.pool_size) {
      throw std::invalid_argument("eval.pool_size " + std::to_string(eval.pool_size) + " exceeds the " +
                                  std::to_string(n_test) + " test samples");
    }
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

data::DatasetConfig RunConfig::dataset_config() const {
  data::DatasetConfig c = dataset;
  c.seed = seed;
  return c;
}

train::VaeTrainConfig RunConfig::vae_config() const {
  train::VaeTrainConfig c;
  c.epochs = vae.epochs;
  c.batch_size = vae.batch_size;
  c.kl_weight = vae.kl_weight;
  c.hidden = vae.hidden;
  c.residual_blocks = vae.residual_blocks;
  c.seed = seed;
  c.optimizer.lr = vae.lr;
  c.optimizer.weight_decay = vae.weight_decay;
  return c;
}

train::GanTrainConfig RunConfig::gan_config() const {
  train::GanTrainConfig c;
  c.arch = gan.arch;
  c.loss = gan.loss;
  c.lambda_gp = gan.lambda_gp;
  c.n_critic = gan.n_critic;
  c.batch_size = gan.batch_size;
  c.steps = gan.steps;
  c.checkpoint_every = gan.checkpoint_every;
  c.seed = seed;
  c.g_optimizer.lr = c.d_optimizer.lr = gan.lr;
  c.g_optimizer.weight_decay = c.d_optimizer.weight_decay = gan.weight_decay;
  return c;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  Fields top(j, "");
  top.opt("seed", c.seed);
  std::string out = c.out_dir.string();
  top.opt("out_dir", out);
  c.out_dir = out;
  if (j.contains("evaluator_cache")) {
    std::string cache;
    top.opt("evaluator_cache", cache);
    c.evaluator_cache = cache;
  }
  if (auto d = top.child("dataset")) {
    d->opt("n_per_action", c.dataset.n_per_action);
    d->opt("split_ratio", c.dataset.split_ratio);
    d->opt("num_actions", c.dataset.num_actions);
    d->opt("variation", c.dataset.variation);
    d->done();
  }
  if (auto v = top.child("vae")) {
    v->opt("epochs", c.vae.epochs);
    v->opt("batch_size", c.vae.batch_size);
    v->opt("kl_weight", c.vae.kl_weight);
    v->opt("hidden", c.vae.hidden);
    v->opt("residual_blocks", c.vae.residual_blocks);
    v->opt("lr", c.vae.lr);
    v->opt("weight_decay", c.vae.weight_decay);
    v->done();
  }
  if (auto g = top.child("gan")) {
    g->opt_enum("condition", c.gan.condition, data::parse_condition_kind);
    g->opt_enum("arch", c.gan.arch, nets::parse_arch);
    g->opt_enum("loss", c.gan.loss, train::parse_loss);
    g->opt("lambda_gp", c.gan.lambda_gp);
    g->opt("n_critic", c.gan.n_critic);
    g->opt("batch_size", c.gan.batch_size);
    g->opt("steps", c.gan.steps);
    g->opt("checkpoint_every", c.gan.checkpoint_every);
    g->opt("lr", c.gan.lr);
    g->opt("weight_decay", c.gan.weight_decay);
    g->opt_enum("real_latents", c.gan.real_latents, parse_real_latents);
    g->done();
  }
  if (auto e = top.child("eval")) {
    e->opt("repetitions", c.eval.repetitions);
    if (j.at("eval").contains("seed")) {
      std::uint64_t s = 0;
      e->opt("seed", s);
      c.eval.seed = s;
    }
    e->opt("pool_size", c.eval.pool_size);
    e->opt("diversity_pairs", c.eval.diversity_pairs);
    e->opt("mm_samples", c.eval.mm_samples);
    e->opt("mm_pairs", c.eval.mm_pairs);
    if (auto ev = e->child("evaluator")) {
      ev->opt("hidden", c.eval.evaluator.hidden);
      ev->opt("epochs", c.eval.evaluator.epochs);
      ev->opt("batch_size", c.eval.evaluator.batch_size);
      ev->opt("lr", c.eval.evaluator.lr);
      ev->opt("margin", c.eval.evaluator.margin);
      ev->opt("min_accuracy", c.eval.evaluator.min_accuracy);
      ev->done();
    }
    e->done();
  }
  top.done();
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  json j{{"seed", c.seed},
         {"out_dir", c.out_dir.string()},
         {"dataset",
          {{"n_per_action", c.dataset.n_per_action},
           {"split_ratio", c.dataset.split_ratio},
           {"num_actions", c.dataset.num_actions},
           {"variation", c.dataset.variation}}},
         {"vae",
          {{"epochs", c.vae.epochs},
           {"batch_size", c.vae.batch_size},
           {"kl_weight", c.vae.kl_weight},
           {"hidden", c.vae.hidden},
           {"residual_blocks", c.vae.residual_blocks},
           {"lr", c.vae.lr},
           {"weight_decay", c.vae.weight_decay}}},
         {"gan",
          {{"condition", data::to_string(c.gan.condition)},
           {"arch", nets::to_string(c.gan.arch)},
           {"loss", train::to_string(c.gan.loss)},
           {"lambda_gp", c.gan.lambda_gp},
           {"n_critic", c.gan.n_critic},
           {"batch_size", c.gan.batch_size},
           {"steps", c.gan.steps},
           {"checkpoint_every", c.gan.checkpoint_every},
           {"lr", c.gan.lr},
           {"weight_decay", c.gan.weight_decay},
           {"real_latents", real_latents_name(c.gan.real_latents)}}},
         {"eval",
          {{"repetitions", c.eval.repetitions},
           {"pool_size", c.eval.pool_size},
           {"diversity_pairs", c.eval.diversity_pairs},
           {"mm_samples", c.eval.mm_samples},
           {"mm_pairs", c.eval.mm_pairs},
           {"evaluator",
            {{"hidden", c.eval.evaluator.hidden},
             {"epochs", c.eval.evaluator.epochs},
             {"batch_size", c.eval.evaluator.batch_size},
             {"lr", c.eval.evaluator.lr},
             {"margin", c.eval.evaluator.margin},
             {"min_accuracy", c.eval.evaluator.min_accuracy}}}}}};
  if (c.eval.seed) j["eval"]["seed"] = *c.eval.seed;
  if (c.evaluator_cache) j["evaluator_cache"] = c.evaluator_cache->string();
  return j;
}

RunConfig load_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

// IO

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest failed");
  }
  std::string out;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    out += buf;
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_document(const fs::path& path, const json& j) {
  if (path.extension() == ".cbor") {
    const auto bytes = json::to_cbor(j);
    write_file(path, std::string(bytes.begin(), bytes.end()));
  } else {
    write_file(path, j.dump(2) + "\n");
  }
}

json read_document(const fs::path& path) {
  const std::string bytes = read_file(path);
  try {
    return path.extension() == ".cbor" ? json::from_cbor(bytes) : json::parse(bytes);
  } catch (const json::exception& e) {
    throw std::runtime_error("cannot parse " + path.string() + ": " + e.what());
  }
}

std::string dataset_digest(const fs::path& data_dir) {
  std::string all;
  for (const char* name : {"manifest.json", "train.jsonl", "test.jsonl"}) all += sha256_file(data_dir / name);
  return sha256_hex(all);
}

namespace {

std::string relative_name(const RunConfig& config, const fs::path& p) {
  const fs::path rel = fs::relative(p, config.out_dir);
  const std::string s = rel.string();
  return s.empty() || s.rfind("..", 0) == 0 ? fs::absolute(p).string() : s;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace

void record_stage(const RunConfig& config, const std::string& stage, const std::vector<fs::path>& inputs,
                  const std::vector<fs::path>& outputs, double seconds) {
  const Layout layout{config.out_dir};
  json manifest = fs::exists(layout.manifest()) ? read_document(layout.manifest()) : json::object();
  manifest["schema_version"] = 1;
  manifest["kind"] = "run_manifest";
  manifest["tool_version"] = kToolVersion;
  manifest["config_hash"] = sha256_hex(to_json(config).dump());
  manifest["config"] = to_json(config);
  json in = json::object(), out = json::object();
  for (const auto& p : inputs) in[relative_name(config, p)] = sha256_file(p);
  for (const auto& p : outputs) out[relative_name(config, p)] = sha256_file(p);
  manifest["stages"][stage] = {{"inputs", in}, {"outputs", out}, {"seconds", seconds}, {"finished_at", utc_now()}};
  write_document(layout.manifest(), manifest);
}

// Stage helpers

namespace {

std::vector<fs::path> dataset_files(const Layout& l) {
  return {l.data() / "manifest.json", l.data() / "train.jsonl", l.data() / "test.jsonl"};
}

data::Dataset load_dataset(const RunConfig& config) {
  const Layout l{config.out_dir};
  if (!fs::exists(l.data() / "manifest.json")) {
    throw std::runtime_error("no dataset under " + l.data().string() + "; run `lsgan synth-data` first");
  }
  data::Dataset ds = data::read_dataset(l.data());
  if (data::to_json(ds.config) != data::to_json(config.dataset_config())) {
    throw std::runtime_error("dataset under " + l.data().string() +
                             " was generated with a different config; rerun `lsgan synth-data`");
  }
  return ds;
}

train::VaeModel load_vae(const RunConfig& config) {
  const Layout l{config.out_dir};
  if (!fs::exists(l.vae())) throw std::runtime_error("no VAE at " + l.vae().string() + "; run `lsgan train-vae` first");
  const json j = read_document(l.vae());
  if (j.value("kind", "") != "vae_checkpoint") throw std::runtime_error(l.vae().string() + " is not a VAE checkpoint");
  if (j.at("dataset_digest") != dataset_digest(l.data())) {
    throw std::runtime_error("VAE at " + l.vae().string() + " was trained on a different dataset; rerun `lsgan train-vae`");
  }
  return train::vae_model_from_json(j.at("model"));
}

struct GanCheckpoint {
  train::GanModel model;
  std::size_t step = 0;
};

GanCheckpoint load_gan(const RunConfig& config, const std::optional<fs::path>& path) {
  const Layout l{config.out_dir};
  const fs::path p = path.value_or(l.gan_best());
  if (!fs::exists(p)) throw std::runtime_error("no GAN checkpoint at " + p.string() + "; run `lsgan train-gan` first");
  const json j = read_document(p);
  if (j.value("kind", "") != "gan_checkpoint") throw std::runtime_error(p.string() + " is not a GAN checkpoint");
  if (fs::exists(l.vae()) && j.at("vae_digest") != sha256_file(l.vae())) {
    throw std::runtime_error("GAN checkpoint " + p.string() + " was trained against a different VAE");
  }
  return {train::gan_model_from_json(j.at("model")), j.at("step").get<std::size_t>()};
}

Tensor text_condition_matrix(const std::vector<data::Sample>& samples) {
  std::vector<double> out;
  out.reserve(samples.size() * data::kTextDim);
  for (const auto& s : samples) {
    const auto v = s.condition.values.data();
    out.insert(out.end(), v.begin(), v.end());
  }
  return Tensor::computed({samples.size(), data::kTextDim}, std::move(out));
}

/// Generator output for one row per sample of `split`, decoded to features.
Tensor generate_features(const train::GanModel& model, const train::VaeModel& vae,
                         const std::vector<data::Sample>& split, std::mt19937_64& rng) {
  const Tensor z = model.kind == data::ConditionKind::action ? model.generate(data::labels_of(split), rng)
                                                             : model.generate(text_condition_matrix(split), rng);
  return vae.decode(z);
}

/// Evaluator-space text conditions for `split`.
Tensor condition_texts(data::ConditionKind kind, const std::vector<data::Sample>& split) {
  return kind == data::ConditionKind::text ? text_condition_matrix(split)
                                           : eval::action_text_conditions(data::labels_of(split));
}

std::string condition_tag(std::size_t action) { return std::string(data::action_names().at(action)); }

}  // namespace

train::LatentData latent_data(const RunConfig& config, const data::Dataset& ds, const train::VaeModel& vae,
                              const std::vector<data::Sample>& split) {
  train::LatentData d;
  d.kind = config.gan.condition;
  const Tensor features = data::feature_matrix(split);
  if (config.gan.real_latents == RealLatents::mean) {
    d.latents = vae.encode_mean(features);
  } else {
    auto rng = seeded(config.seed, 0x6c6174656e74ULL);
    d.latents = vae.encode_sample(features, rng);
  }
  d.labels = data::labels_of(split);
  d.num_classes = ds.config.num_actions;
  if (d.kind == data::ConditionKind::text) d.text_conditions = text_condition_matrix(split);
  d.validate();
  return d;
}

// Commands

void cmd_synth_data(const RunConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Layout l{config.out_dir};
  const data::Dataset ds = data::make_dataset(config.dataset_config());
  data::write_dataset(l.data(), ds);
  log_line("wrote " + std::to_string(ds.train.size()) + " train / " + std::to_string(ds.test.size()) +
           " test samples to " + l.data().string());
  record_stage(config, "synth_data", {}, dataset_files(l), seconds_since(t0));
}

train::VaeModel cmd_train_vae(const RunConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Layout l{config.out_dir};
  const data::Dataset ds = load_dataset(config);
  const Tensor train_features = data::feature_matrix(ds.train);
  const auto result = train::train_vae(train_features, config.vae_config());

  std::string log;
  for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
    log += json{{"epoch", e + 1}, {"loss", result.loss_history[e]}}.dump() + "\n";
  }
  write_file(l.vae_log(), log);
  const Tensor test_features = data::feature_matrix(ds.test);
  const double var = train::mean_feature_variance(train_features);
  const double mse_train = train::reconstruction_mse(result.model, train_features);
  const double mse_test = train::reconstruction_mse(result.model, test_features);
  write_document(l.vae(), json{{"schema_version", 1},
                               {"kind", "vae_checkpoint"},
                               {"dataset_digest", dataset_digest(l.data())},
                               {"epochs", config.vae.epochs},
                               {"model", train::to_json(result.model)}});
  const fs::path summary = l.vae().parent_path() / "summary.json";
  write_document(summary, json{{"schema_version", 1},
                               {"kind", "vae_summary"},
                               {"feature_variance", var},
                               {"reconstruction_mse_train", mse_train},
                               {"reconstruction_mse_test", mse_test},
                               {"final_loss", result.loss_history.back()}});
  log_line("vae: reconstruction mse " + std::to_string(mse_train) + " (train), " + std::to_string(mse_test) +
           " (test); feature variance " + std::to_string(var));
  auto inputs = dataset_files(l);
  record_stage(config, "train_vae", inputs, {l.vae(), l.vae_log(), summary}, seconds_since(t0));
  return result.model;
}

eval::EvaluatorNet load_or_train_evaluator(const RunConfig& config) {
  const Layout l{config.out_dir};
  eval::EvaluatorConfig ec = config.eval.evaluator;
  ec.seed = config.seed;
  const std::string digest = dataset_digest(l.data());
  json key{{"dataset", digest},
           {"hidden", ec.hidden},
           {"epochs", ec.epochs},
           {"batch_size", ec.batch_size},
           {"lr", ec.lr},
           {"margin", ec.margin},
           {"min_accuracy", ec.min_accuracy},
           {"seed", ec.seed}};
  const fs::path path = config.evaluator_cache_dir() / ("evaluator_" + sha256_hex(key.dump()).substr(0, 16) + ".cbor");
  if (fs::exists(path)) {
    const json j = read_document(path);
    if (j.value("dataset_digest", "") == digest) return eval::evaluator_from_json(j.at("model"));
  }
  const data::Dataset ds = load_dataset(config);
  log_line("training evaluator (cache miss: " + path.string() + ")");
  const auto e = eval::train_evaluator(ds, ec);
  log_line("evaluator held-out accuracy " + std::to_string(e.heldout_accuracy));
  write_document(path, json{{"schema_version", 1},
                            {"kind", "evaluator_cache"},
                            {"dataset_digest", digest},
                            {"key", key},
                            {"model", eval::to_json(e)}});
  return e;
}

namespace {

json run_state_json(const train::GanState& state, const std::vector<train::Snapshot>& snapshots,
                    const std::optional<train::GanModel>& best) {
  json snaps = json::array();
  for (const auto& s : snapshots) snaps.push_back(train::to_json(s));
  json j{{"schema_version", 1}, {"kind", "gan_run_state"}, {"state", train::to_json(state)}, {"snapshots", snaps}};
  if (best) j["best"] = train::to_json(*best);
  return j;
}

json gan_checkpoint_json(const RunConfig& config, const train::GanModel& model, std::size_t step,
                         std::optional<double> fid, const std::string& vae_digest) {
  json j{{"schema_version", 1},
         {"kind", "gan_checkpoint"},
         {"step", step},
         {"condition", data::to_string(config.gan.condition)},
         {"arch", nets::to_string(config.gan.arch)},
         {"loss", train::to_string(config.gan.loss)},
         {"vae_digest", vae_digest},
         {"model", train::to_json(model)}};
  j["fid"] = fid ? json(*fid) : json(nullptr);
  return j;
}

json snapshots_json(const std::vector<train::Snapshot>& snapshots) {
  json snaps = json::array();
  for (const auto& s : snapshots) snaps.push_back(train::to_json(s));
  json j{{"schema_version", 1}, {"kind", "gan_snapshots"}, {"snapshots", snaps}};
  if (!snapshots.empty()) j["best_step"] = snapshots[train::select_best(snapshots)].step;
  return j;
}

/// Keeps log lines up to and including `step`.
void truncate_log(const fs::path& path, std::size_t step) {
  if (!fs::exists(path)) return;
  std::istringstream in(read_file(path));
  std::string line, kept;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (json::parse(line).at("step").get<std::size_t>() <= step) kept += line + "\n";
  }
  write_file(path, kept);
}

}  // namespace

train::GanTrainResult cmd_train_gan(const RunConfig& config, bool resume) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Layout l{config.out_dir};
  const data::Dataset ds = load_dataset(config);
  const train::VaeModel vae = load_vae(config);
  const std::string vae_digest = sha256_file(l.vae());
  const eval::EvaluatorNet evaluator = load_or_train_evaluator(config);
  const train::LatentData data = latent_data(config, ds, vae, ds.train);

  // Validation FID: generations for every training condition against the
  // real training motions, in evaluator space, with a fixed noise stream.
  const Tensor real_emb = evaluator.embed_motion(data::feature_matrix(ds.train));
  const train::Validator validate = [&](const train::GanModel& m) {
    auto rng = seeded(config.seed, 0x76616c6964ULL);
    return eval::fid(evaluator.embed_motion(generate_features(m, vae, ds.train, rng)), real_emb);
  };

  const train::GanTrainConfig gc = config.gan_config();
  train::GanState state;
  std::vector<train::Snapshot> snapshots;
  std::optional<train::GanModel> best;
  if (resume && fs::exists(l.gan_state())) {
    const json j = read_document(l.gan_state());
    state = train::gan_state_from_json(j.at("state"));
    json saved = train::to_json(state.config), wanted = train::to_json(gc);
    saved.erase("steps");
    wanted.erase("steps");
    if (saved != wanted) throw std::runtime_error("cannot resume: " + l.gan_state().string() + " has a different gan config");
    if (state.model.kind != config.gan.condition) throw std::runtime_error("cannot resume: condition kind differs");
    state.config.steps = gc.steps;
    for (const auto& s : j.at("snapshots")) snapshots.push_back(train::snapshot_from_json(s));
    if (j.contains("best")) best = train::gan_model_from_json(j.at("best"));
    truncate_log(l.gan_log(), state.step);
    log_line("resuming GAN training at step " + std::to_string(state.step));
  } else {
    if (resume) log_line("no GAN state at " + l.gan_state().string() + "; starting from scratch");
    state = train::init_gan_state(gc, data);
    fs::create_directories(l.gan_dir());
    write_file(l.gan_log(), "");
    fs::remove(l.gan_best());
  }

  std::ofstream log(l.gan_log(), std::ios::binary | std::ios::app);
  if (!log) throw std::runtime_error("cannot append to " + l.gan_log().string());
  std::vector<train::Snapshot> all = snapshots;
  std::optional<train::GanModel> best_so_far = best;
  const train::StepHook on_step = [&](const train::StepStats& s) { log << train::to_json(s).dump() << '\n'; };
  const train::CheckpointHook on_checkpoint = [&](const train::GanState& s, const train::Snapshot& snap,
                                                  bool is_best) {
    log.flush();
    all.push_back(snap);
    if (is_best) {
      best_so_far = s.model;
      write_document(l.gan_best(), gan_checkpoint_json(config, s.model, snap.step, snap.fid, vae_digest));
    }
    write_document(l.gan_state(), run_state_json(s, all, best_so_far));
    write_document(l.gan_snapshots(), snapshots_json(all));
    log_line("step " + std::to_string(snap.step) + " validation FID " + std::to_string(snap.fid) +
             (is_best ? " (best)" : ""));
  };
  auto result = train::train_gan(std::move(state), data, validate, on_checkpoint, snapshots, best, on_step);
  log.close();

  if (result.snapshots.empty()) {
    write_document(l.gan_best(),
                   gan_checkpoint_json(config, result.best, result.final_state.step, std::nullopt, vae_digest));
  }
  write_document(l.gan_state(), run_state_json(result.final_state, result.snapshots,
                                               result.snapshots.empty() ? std::nullopt
                                                                        : std::optional<train::GanModel>(result.best)));
  write_document(l.gan_snapshots(), snapshots_json(result.snapshots));
  auto inputs = dataset_files(l);
  inputs.push_back(l.vae());
  record_stage(config, "train_gan", inputs, {l.gan_best(), l.gan_state(), l.gan_log(), l.gan_snapshots()},
               seconds_since(t0));
  return result;
}

void read_conditions_file(const fs::path& path, GenerateRequest& request) {
  const json j = read_document(path);
  if (!j.is_object()) throw std::invalid_argument("conditions file " + path.string() + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (k != "actions" && k != "prompts") {
      throw std::invalid_argument("conditions file " + path.string() + ": unknown key '" + k + "'");
    }
  }
  if (j.contains("actions")) {
    for (const auto& a : j.at("actions")) {
      if (a.is_number_unsigned()) {
        request.actions.push_back(a.get<std::size_t>());
        continue;
      }
      const auto& names = data::action_names();
      const auto it = std::find(names.begin(), names.end(), a.get<std::string>());
      if (it == names.end()) throw std::invalid_argument("conditions file: unknown action '" + a.dump() + "'");
      request.actions.push_back(static_cast<std::size_t>(it - names.begin()));
    }
  }
  if (j.contains("prompts")) request.prompts = j.at("prompts").get<std::vector<std::string>>();
}

json cmd_generate(const RunConfig& config, GenerateRequest request) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Layout l{config.out_dir};
  const auto ckpt = load_gan(config, request.checkpoint.empty() ? std::nullopt : std::optional(request.checkpoint));
  const train::VaeModel vae = load_vae(config);
  if (request.n_per_condition == 0) throw std::invalid_argument("generate: n_per_condition must be positive");
  const fs::path out = request.out_dir.empty() ? l.root / "generated" : request.out_dir;
  const auto& model = ckpt.model;
  const bool action = model.kind == data::ConditionKind::action;
  if (action && !request.prompts.empty()) {
    throw std::invalid_argument("generate: checkpoint is action-conditioned but text prompts were given");
  }
  if (!action && !request.actions.empty()) {
    throw std::invalid_argument("generate: checkpoint is text-conditioned but action conditions were given");
  }
  const std::size_t k = action ? model.g_embed.rows() : config.dataset.num_actions;
  if (action && request.actions.empty()) {
    for (std::size_t a = 0; a < k; ++a) request.actions.push_back(a);
  }
  if (!action && request.prompts.empty()) {
    for (std::size_t a = 0; a < k; ++a) request.prompts.push_back(data::prompt_templates(a).front());
  }

  std::mt19937_64 rng(request.seed);
  const std::size_t n = request.n_per_condition;
  const std::size_t n_conditions = action ? request.actions.size() : request.prompts.size();
  json conditions = json::array();
  std::vector<fs::path> outputs;
  char name[64];
  for (std::size_t c = 0; c < n_conditions; ++c) {
    Tensor z;
    std::string tag, label;
    if (action) {
      const std::size_t a = request.actions[c];
      if (a >= k) throw std::invalid_argument("generate: action " + std::to_string(a) + " out of range");
      z = model.generate(std::vector<std::size_t>(n, a), rng);
      tag = condition_tag(a);
      label = tag;
    } else {
      const Tensor e = data::embed_text(request.prompts[c]).values;
      std::vector<double> rows;
      for (std::size_t i = 0; i < n; ++i) rows.insert(rows.end(), e.data().begin(), e.data().end());
      z = model.generate(Tensor({n, data::kTextDim}, rows), rng);
      std::snprintf(name, sizeof name, "prompt%03zu", c);
      tag = name;
      label = request.prompts[c];
    }
    const Tensor features = vae.decode(z);
    json files = json::array();
    for (std::size_t i = 0; i < n; ++i) {
      data::MotionSequence m = data::unfeaturize(features.row(i));
      if (action) m.action_id = request.actions[c];
      m.prompt = action ? "" : request.prompts[c];
      std::snprintf(name, sizeof name, "_%03zu.csv", i);
      const fs::path file = out / (tag + name);
      fs::create_directories(out);
      data::write_motion_csv(file, m);
      files.push_back(file.filename().string());
      outputs.push_back(file);
    }
    conditions.push_back({{"condition", label}, {"files", files}});
  }
  const json summary{{"schema_version", 1},
                     {"kind", "generation_summary"},
                     {"condition_kind", data::to_string(model.kind)},
                     {"checkpoint_step", ckpt.step},
                     {"seed", request.seed},
                     {"n_per_condition", n},
                     {"frames", data::kResampledFrames},
                     {"total", n * n_conditions},
                     {"conditions", conditions}};
  write_document(out / "summary.json", summary);
  outputs.push_back(out / "summary.json");
  record_stage(config, "generate", {l.vae()}, {out / "summary.json"}, seconds_since(t0));
  return summary;
}

json cmd_evaluate(const RunConfig& config, const EvaluateRequest& request) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Layout l{config.out_dir};
  const data::Dataset ds = load_dataset(config);
  const eval::EvaluatorNet evaluator = load_or_train_evaluator(config);
  const auto& split = ds.test;
  const Tensor real_features = data::feature_matrix(split);
  const Tensor real_emb = evaluator.embed_motion(real_features);
  const auto labels = data::labels_of(split);

  std::optional<GanCheckpoint> ckpt;
  std::optional<train::VaeModel> vae;
  data::ConditionKind kind = config.gan.condition;
  if (!request.real) {
    ckpt = load_gan(config, request.checkpoint);
    vae = load_vae(config);
    kind = ckpt->model.kind;
  }
  const Tensor cond_emb = evaluator.embed_condition(condition_texts(kind, split));

  // Multimodality groups: distinct conditions of the split.
  std::map<std::vector<double>, std::vector<std::size_t>> by_condition;
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto v = kind == data::ConditionKind::action ? std::vector<double>{static_cast<double>(labels[i])}
                                                       : split[i].condition.values.values();
    by_condition[v].push_back(i);
  }
  std::vector<std::vector<std::size_t>> groups;
  for (const auto& [v, rows] : by_condition) {
    if (!request.real || rows.size() >= 2) groups.push_back(rows);
  }
  if (groups.empty()) throw std::runtime_error("evaluate: no condition has two or more samples for multimodality");

  const auto& names = eval::ApeAve::names();
  std::map<std::string, std::vector<double>> values;
  const std::size_t n = split.size();
  for (std::size_t r = 0; r < config.eval.repetitions; ++r) {
    auto rng = seeded(config.eval_seed(), r);
    const Tensor gen_features =
        request.real ? real_features : generate_features(ckpt->model, *vae, split, rng);
    const Tensor gen_emb = evaluator.embed_motion(gen_features);
    values["fid"].push_back(eval::fid(gen_emb, real_emb));
    const auto rp = eval::r_precision(gen_emb, cond_emb, config.eval.pool_size, rng);
    values["r_precision_top1"].push_back(rp[0]);
    values["r_precision_top2"].push_back(rp[1]);
    values["r_precision_top3"].push_back(rp[2]);
    values["mm_dist"].push_back(eval::mm_dist(gen_emb, cond_emb));
    values["diversity"].push_back(eval::diversity(gen_emb, config.eval.diversity_pairs, rng));

    std::vector<Tensor> mm_groups;
    for (const auto& rows : groups) {
      if (request.real) {
        mm_groups.push_back(train::gather_rows(real_emb, rows));
        continue;
      }
      const std::vector<data::Sample> reps(config.eval.mm_samples, split[rows.front()]);
      mm_groups.push_back(evaluator.embed_motion(generate_features(ckpt->model, *vae, reps, rng)));
    }
    values["multimodality"].push_back(eval::multimodality(mm_groups, config.eval.mm_pairs, rng));
    values["accuracy"].push_back(eval::action_accuracy(evaluator, gen_features, labels));

    std::array<double, 8> ape{};
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = eval::ape_ave(data::unfeaturize(gen_features.row(i)), data::unfeaturize(real_features.row(i)))
                         .values();
      for (std::size_t k = 0; k < 8; ++k) ape[k] += v[k] / static_cast<double>(n);
    }
    for (std::size_t k = 0; k < 8; ++k) values[names[k]].push_back(ape[k]);
  }

  const std::size_t mm_rows = request.real ? 0 : config.eval.mm_samples;
  std::map<std::string, std::size_t> samples = {
      {"fid", n},       {"r_precision_top1", n}, {"r_precision_top2", n}, {"r_precision_top3", n},
      {"mm_dist", n},   {"diversity", n},        {"accuracy", n},
      {"multimodality", request.real ? n : groups.size() * mm_rows}};
  for (const char* name : names) samples[name] = n;
  json metrics = json::object();
  for (const auto& [name, v] : values) {
    json m = eval::to_json(eval::summarize(v));
    m["samples"] = samples.at(name);
    metrics[name] = m;
  }
  json report{{"schema_version", 1},
              {"kind", "metric_report"},
              {"source", request.real ? "real" : "generator"},
              {"condition", data::to_string(kind)},
              {"seed", config.eval_seed()},
              {"repetitions", config.eval.repetitions},
              {"split", "test"},
              {"sample_counts",
               {{"real", n},
                {"generated", request.real ? 0 : n},
                {"r_precision_pool", config.eval.pool_size},
                {"diversity_pairs", config.eval.diversity_pairs},
                {"multimodality_conditions", groups.size()},
                {"multimodality_samples_per_condition", mm_rows},
                {"multimodality_pairs_per_condition", config.eval.mm_pairs}}},
              {"evaluator", {{"heldout_accuracy", evaluator.heldout_accuracy}}},
              {"metrics", metrics}};
  if (ckpt) {
    report["checkpoint_step"] = ckpt->step;
    report["checkpoint"] = relative_name(config, request.checkpoint.value_or(l.gan_best()));
  }
  const fs::path path = request.real ? l.root / "eval" / "report_real.json" : l.report();
  write_document(path, report);
  std::vector<fs::path> inputs = dataset_files(l);
  if (ckpt) {
    inputs.push_back(l.vae());
    inputs.push_back(request.checkpoint.value_or(l.gan_best()));
  }
  record_stage(config, request.real ? "evaluate_real" : "evaluate", inputs, {path}, seconds_since(t0));
  return report;
}

json cmd_flops(nets::Arch arch, train::Loss loss, data::ConditionKind condition, std::size_t batch, bool macs,
               const RunConfig::Vae& vae) {
  nets::VaeConfig vc;
  vc.feature_dim = data::kFeatureDim;
  vc.hidden = vae.hidden;
  vc.residual_blocks = vae.residual_blocks;
  const std::size_t cd = condition == data::ConditionKind::action ? nets::kActionCondDim : nets::kTextCondDim;
  const auto f = eval::generation_flops(arch, cd, vc, batch, macs);
  json j = eval::to_json(f);
  j["schema_version"] = 1;
  j["kind"] = "flop_count";
  j["arch"] = nets::to_string(arch);
  j["loss"] = train::to_string(loss);
  j["condition"] = data::to_string(condition);
  j["batch"] = batch;
  j["convention"] = macs ? "macs" : "flops";
  j["gflops"] = f.total / 1e9;
  return j;
}

json cmd_export_latents(const RunConfig& config, const ExportRequest& request) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Layout l{config.out_dir};
  const auto ckpt = load_gan(config, request.checkpoint);
  if (ckpt.model.kind != data::ConditionKind::action) {
    throw std::invalid_argument("export-latents: needs an action-conditioned checkpoint");
  }
  if (request.n_per_action == 0) throw std::invalid_argument("export-latents: n_per_action must be positive");
  const data::Dataset ds = load_dataset(config);
  const train::VaeModel vae = load_vae(config);
  const std::size_t k = ds.config.num_actions;

  std::vector<data::Sample> pool = ds.train;
  pool.insert(pool.end(), ds.test.begin(), ds.test.end());
  std::vector<data::Sample> chosen;
  std::vector<std::size_t> labels;
  for (std::size_t a = 0; a < k; ++a) {
    std::size_t taken = 0;
    for (const auto& s : pool) {
      if (s.motion.action_id == a && taken < request.n_per_action) {
        chosen.push_back(s);
        ++taken;
      }
    }
    if (taken < request.n_per_action) {
      throw std::invalid_argument("export-latents: action " + condition_tag(a) + " has only " + std::to_string(taken) +
                                  " real samples");
    }
    labels.insert(labels.end(), request.n_per_action, a);
  }
  const Tensor real = vae.encode_mean(data::feature_matrix(chosen));
  std::mt19937_64 rng(request.seed);
  const Tensor fake = ckpt.model.generate(labels, rng);
  std::vector<double> stacked = real.values();
  stacked.insert(stacked.end(), fake.data().begin(), fake.data().end());
  std::vector<std::size_t> all_labels = labels;
  all_labels.insert(all_labels.end(), labels.begin(), labels.end());
  const auto proj = eval::pca_project(Tensor({2 * labels.size(), nets::kLatentDim}, stacked), all_labels);

  const fs::path csv = request.csv.empty() ? l.root / "latents.csv" : request.csv;
  std::string text = "sample_id,condition,source,pc1,pc2\n";
  char buf[160];
  for (std::size_t i = 0; i < all_labels.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%s,%s,%.9g,%.9g\n", i, condition_tag(all_labels[i]).c_str(),
                  i < labels.size() ? "real" : "generated", proj.coords.at(i, 0), proj.coords.at(i, 1));
    text += buf;
  }
  write_file(csv, text);

  std::vector<std::size_t> real_rows(labels.size()), fake_rows(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) real_rows[i] = i, fake_rows[i] = labels.size() + i;
  const json summary{{"schema_version", 1},
                     {"kind", "latent_projection"},
                     {"rows", all_labels.size()},
                     {"n_per_action", request.n_per_action},
                     {"seed", request.seed},
                     {"silhouette_real", eval::silhouette(train::gather_rows(proj.coords, real_rows), labels)},
                     {"silhouette_generated", eval::silhouette(train::gather_rows(proj.coords, fake_rows), labels)},
                     {"csv", csv.filename().string()}};
  const fs::path summary_path = csv.parent_path() / (csv.stem().string() + "_summary.json");
  write_document(summary_path, summary);
  record_stage(config, "export_latents", {l.vae(), request.checkpoint.value_or(l.gan_best())}, {csv, summary_path},
               seconds_since(t0));
  return summary;
}

}  // namespace lsgan::pipeline
