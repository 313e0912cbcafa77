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


// Run orchestration behind the `lsgan` command: configuration, on-disk
// artifacts, manifests, and the seven stage commands.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsgan/eval.hpp"
#include "lsgan/nets.hpp"
#include "lsgan/synthdata.hpp"
#include "lsgan/training.hpp"

namespace lsgan::pipeline {

namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "0.1.0";

enum class RealLatents { mean, sample };

struct RunConfig {
  std::uint64_t seed = 0;
  fs::path out_dir = "run";
  // Defaults to <out_dir>/evaluator_cache.
  std::optional<fs::path> evaluator_cache;

  data::DatasetConfig dataset;

  struct Vae {
    std::size_t epochs = 200;
    std::size_t batch_size = 128;
    double kl_weight = 1e-4;
    std::vector<std::size_t> hidden = {512};
    std::size_t residual_blocks = 0;
    double lr = 1e-4;
    double weight_decay = 0.01;
  } vae;

  struct Gan {
    data::ConditionKind condition = data::ConditionKind::action;
    nets::Arch arch = nets::Arch::deep;
    train::Loss loss = train::Loss::wgan_gp;
    double lambda_gp = 10.0;
    std::size_t n_critic = 5;
    std::size_t batch_size = 64;
    std::size_t steps = 2000;
    std::size_t checkpoint_every = 100;
    double lr = 1e-4;
    double weight_decay = 0.01;
    RealLatents real_latents = RealLatents::mean;
  } gan;

  struct Eval {
    std::size_t repetitions = 20;
    std::optional<std::uint64_t> seed;  // defaults to the global seed
    std::size_t pool_size = 32;
    std::size_t diversity_pairs = 300;
    std::size_t mm_samples = 10;  // generations per condition
    std::size_t mm_pairs = 10;    // pairs per condition
    eval::EvaluatorConfig evaluator;
  } eval;

  void validate() const;
  std::uint64_t eval_seed() const { return eval.seed.value_or(seed); }
  fs::path evaluator_cache_dir() const { return evaluator_cache.value_or(out_dir / "evaluator_cache"); }

  data::DatasetConfig dataset_config() const;
  train::VaeTrainConfig vae_config() const;
  train::GanTrainConfig gan_config() const;
};

/// Unknown keys anywhere in the document are rejected.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);
RunConfig load_config(const fs::path& path);

// Artifact locations under out_dir.
struct Layout {
  fs::path root;
  fs::path data() const { return root / "data"; }
  fs::path vae() const { return root / "vae" / "vae.cbor"; }
  fs::path vae_log() const { return root / "vae" / "log.jsonl"; }
  fs::path gan_dir() const { return root / "gan"; }
  fs::path gan_state() const { return gan_dir() / "last.cbor"; }
  fs::path gan_best() const { return gan_dir() / "best.cbor"; }
  fs::path gan_log() const { return gan_dir() / "log.jsonl"; }
  fs::path gan_snapshots() const { return gan_dir() / "snapshots.json"; }
  fs::path report() const { return root / "eval" / "report.json"; }
  fs::path manifest() const { return root / "manifest.json"; }
};

// IO helpers.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const fs::path& path);
std::string read_file(const fs::path& path);
/// Writes via a temporary file and rename.
void write_file(const fs::path& path, const std::string& bytes);
/// `.cbor` paths are binary CBOR; everything else is indented JSON.
void write_document(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_document(const fs::path& path);
/// SHA-256 over the dataset's train, test and manifest files.
std::string dataset_digest(const fs::path& data_dir);

/// Records one stage: input and output digests plus wall-clock seconds.
void record_stage(const RunConfig& config, const std::string& stage, const std::vector<fs::path>& inputs,
                  const std::vector<fs::path>& outputs, double seconds);

// Stage commands.
void cmd_synth_data(const RunConfig& config);
train::VaeModel cmd_train_vae(const RunConfig& config);
train::GanTrainResult cmd_train_gan(const RunConfig& config, bool resume = false);

/// Frozen evaluator for the run's dataset, trained on demand and cached by
/// dataset digest and evaluator config.
eval::EvaluatorNet load_or_train_evaluator(const RunConfig& config);

/// Real GAN targets from the frozen VAE.
train::LatentData latent_data(const RunConfig& config, const data::Dataset& ds, const train::VaeModel& vae,
                              const std::vector<data::Sample>& split);

struct GenerateRequest {
  fs::path checkpoint;  // defaults to the run's best GAN checkpoint
  fs::path out_dir;     // defaults to <out_dir>/generated
  std::vector<std::size_t> actions;  // action mode; empty means all
  std::vector<std::string> prompts;  // text mode
  std::size_t n_per_condition = 30;
  std::uint64_t seed = 0;
};

/// Conditions file: {"actions": [ids or names]} or {"prompts": [...]}.
void read_conditions_file(const fs::path& path, GenerateRequest& request);
nlohmann::json cmd_generate(const RunConfig& config, GenerateRequest request);

struct EvaluateRequest {
  std::optional<fs::path> checkpoint;
  /// Scores the real test split against itself instead of a generator.
  bool real = false;
};

nlohmann::json cmd_evaluate(const RunConfig& config, const EvaluateRequest& request = {});

nlohmann::json cmd_flops(nets::Arch arch, train::Loss loss, data::ConditionKind condition, std::size_t batch,
                         bool macs, const RunConfig::Vae& vae = {});

struct ExportRequest {
  std::optional<fs::path> checkpoint;
  fs::path csv;  // defaults to <out_dir>/latents.csv
  std::size_t n_per_action = 30;
  std::uint64_t seed = 0;
};

/// Writes the projection CSV and returns a summary with silhouettes.
nlohmann::json cmd_export_latents(const RunConfig& config, const ExportRequest& request);

}  // namespace lsgan::pipeline
