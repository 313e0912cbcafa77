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


// lsgan: synthetic corpus, VAE and latent GAN training, generation,
// evaluation, FLOP accounting and latent export.

#include <CLI11.hpp>

#include <iostream>

#include "lsgan/pipeline.hpp"

using namespace lsgan;
namespace pl = lsgan::pipeline;

namespace {

template <class T>
void override_if(const CLI::Option* opt, T& target, const T& value) {
  if (opt->count() > 0) target = value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-space conditional motion GAN toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  app.add_option("-c,--config", config_path, "JSON run config")->check(CLI::ExistingFile);
  auto* out_opt = app.add_option("-o,--out", out_dir, "Run directory (overrides out_dir)");
  auto* seed_opt = app.add_option("--seed", seed, "Global seed (overrides config)");

  // synth-data
  auto* synth = app.add_subcommand("synth-data", "Generate the procedural motion corpus");
  std::size_t n_per_action = 0, num_actions = 0;
  auto* npa_opt = synth->add_option("--n-per-action", n_per_action);
  auto* k_opt = synth->add_option("--num-actions", num_actions);

  // train-vae
  auto* vae_cmd = app.add_subcommand("train-vae", "Train the motion VAE");
  std::size_t vae_epochs = 0;
  auto* vae_epochs_opt = vae_cmd->add_option("--epochs", vae_epochs);

  // train-gan
  auto* gan_cmd = app.add_subcommand("train-gan", "Train the latent GAN against the frozen VAE");
  std::string arch, loss, condition;
  std::size_t steps = 0, n_critic = 0, checkpoint_every = 0;
  double lambda_gp = 0.0;
  bool resume = false;
  auto* arch_opt = gan_cmd->add_option("--arch", arch)->check(CLI::IsMember({"vanilla", "deep"}));
  auto* loss_opt = gan_cmd->add_option("--loss", loss)->check(CLI::IsMember({"bce", "wgan_gp"}));
  auto* cond_opt = gan_cmd->add_option("--condition", condition)->check(CLI::IsMember({"action", "text"}));
  auto* steps_opt = gan_cmd->add_option("--steps", steps);
  auto* critic_opt = gan_cmd->add_option("--n-critic", n_critic);
  auto* every_opt = gan_cmd->add_option("--checkpoint-every", checkpoint_every);
  auto* lambda_opt = gan_cmd->add_option("--lambda-gp", lambda_gp);
  gan_cmd->add_flag("--resume", resume, "Continue from the last saved state");

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "Sample motions and write frame CSVs");
  pl::GenerateRequest gen_req;
  std::string gen_ckpt, gen_conditions, gen_out;
  gen_cmd->add_option("--checkpoint", gen_ckpt, "GAN checkpoint (default: run best)");
  gen_cmd->add_option("--conditions", gen_conditions, "JSON file with actions or prompts")->check(CLI::ExistingFile);
  gen_cmd->add_option("--n-per-condition", gen_req.n_per_condition)->capture_default_str();
  gen_cmd->add_option("--sample-seed", gen_req.seed)->capture_default_str();
  gen_cmd->add_option("--output-dir", gen_out, "Default: <run>/generated");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Metric report over repeated seeded runs");
  std::string eval_ckpt;
  std::size_t repetitions = 0;
  bool eval_real = false;
  eval_cmd->add_option("--checkpoint", eval_ckpt);
  auto* reps_opt = eval_cmd->add_option("--repetitions", repetitions);
  eval_cmd->add_flag("--real", eval_real, "Score the real test split against itself");

  // flops
  auto* flops_cmd = app.add_subcommand("flops", "Analytic FLOPs of the generation path");
  std::string f_arch = "deep", f_loss = "wgan_gp", f_cond = "text";
  std::size_t f_batch = 2048;
  bool f_macs = false;
  flops_cmd->add_option("--arch", f_arch)->check(CLI::IsMember({"vanilla", "deep"}))->capture_default_str();
  flops_cmd->add_option("--loss", f_loss)->check(CLI::IsMember({"bce", "wgan_gp"}))->capture_default_str();
  flops_cmd->add_option("--condition", f_cond)->check(CLI::IsMember({"action", "text"}))->capture_default_str();
  flops_cmd->add_option("--batch", f_batch)->capture_default_str();
  flops_cmd->add_flag("--macs", f_macs, "Count multiply-adds once");

  // export-latents
  auto* exp_cmd = app.add_subcommand("export-latents", "PCA projection of real and generated latents");
  pl::ExportRequest exp_req;
  std::string exp_ckpt, exp_csv;
  exp_cmd->add_option("--checkpoint", exp_ckpt);
  exp_cmd->add_option("--n-per-action", exp_req.n_per_action)->capture_default_str();
  exp_cmd->add_option("--sample-seed", exp_req.seed)->capture_default_str();
  exp_cmd->add_option("--csv", exp_csv, "Default: <run>/latents.csv");

  CLI11_PARSE(app, argc, argv);

  try {
    pl::RunConfig config = config_path.empty() ? pl::config_from_json(nlohmann::json::object())
                                               : pl::load_config(config_path);
    override_if(out_opt, config.out_dir, std::filesystem::path(out_dir));
    override_if(seed_opt, config.seed, seed);
    override_if(npa_opt, config.dataset.n_per_action, n_per_action);
    override_if(k_opt, config.dataset.num_actions, num_actions);
    override_if(vae_epochs_opt, config.vae.epochs, vae_epochs);
    if (arch_opt->count()) config.gan.arch = nets::parse_arch(arch);
    if (loss_opt->count()) config.gan.loss = train::parse_loss(loss);
    if (cond_opt->count()) config.gan.condition = data::parse_condition_kind(condition);
    override_if(steps_opt, config.gan.steps, steps);
    override_if(critic_opt, config.gan.n_critic, n_critic);
    override_if(every_opt, config.gan.checkpoint_every, checkpoint_every);
    override_if(lambda_opt, config.gan.lambda_gp, lambda_gp);
    override_if(reps_opt, config.eval.repetitions, repetitions);
    config.validate();

    if (*synth) {
      pl::cmd_synth_data(config);
    } else if (*vae_cmd) {
      pl::cmd_train_vae(config);
    } else if (*gan_cmd) {
      const auto r = pl::cmd_train_gan(config, resume);
      nlohmann::json out{{"steps", r.final_state.step}};
      if (!r.snapshots.empty()) {
        out["best_step"] = r.snapshots[r.best_index].step;
        out["best_fid"] = r.snapshots[r.best_index].fid;
      }
      std::cout << out.dump(2) << '\n';
    } else if (*gen_cmd) {
      gen_req.checkpoint = gen_ckpt;
      gen_req.out_dir = gen_out;
      if (!gen_conditions.empty()) pl::read_conditions_file(gen_conditions, gen_req);
      std::cout << pl::cmd_generate(config, gen_req).dump(2) << '\n';
    } else if (*eval_cmd) {
      pl::EvaluateRequest req;
      if (!eval_ckpt.empty()) req.checkpoint = eval_ckpt;
      req.real = eval_real;
      std::cout << pl::cmd_evaluate(config, req).dump(2) << '\n';
    } else if (*flops_cmd) {
      std::cout << pl::cmd_flops(nets::parse_arch(f_arch), train::parse_loss(f_loss),
                                 data::parse_condition_kind(f_cond), f_batch, f_macs, config.vae)
                       .dump(2)
                << '\n';
    } else if (*exp_cmd) {
      if (!exp_ckpt.empty()) exp_req.checkpoint = exp_ckpt;
      exp_req.csv = exp_csv;
      std::cout << pl::cmd_export_latents(config, exp_req).dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
