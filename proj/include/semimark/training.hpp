// Copyright 2026 The semimark Authors.
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


#ifndef SEMIMARK_TRAINING_HPP
#define SEMIMARK_TRAINING_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "json.hpp"
#include "semimark/corpus.hpp"
#include "semimark/distortions.hpp"
#include "semimark/model.hpp"

namespace semimark {

struct LossWeights {
  double lambda_i = 0.01;
  double lambda_d = 0.01;
  double lambda_r = 1.0;
  double lambda_f = 1.0;
  bool operator==(const LossWeights&) const = default;
};

struct AdamSettings {
  double lr = 2e-4;
  double beta1 = 0.94;
  double beta2 = 0.98;
  bool operator==(const AdamSettings&) const = default;
};

struct TrainConfig {
  AdamSettings adam;
  LossWeights weights;
  int batch_size = 16;
  int64_t steps = 2000;
  double clip_seconds = 2.0;
  uint64_t seed = 0;
  // Upper bound on the fragility term (chance-level MSE for {0,1} bits).
  double fragility_cap = 0.25;
  // Global-norm gradient clipping for both phases; 0 disables.
  double grad_clip = 5.0;
  DistortionRanges ranges;
  int64_t checkpoint_every = 250;
  int64_t probe_every = 50;
  int probe_batch = 8;

  void validate() const;
  bool operator==(const TrainConfig& o) const;
};

void to_json(nlohmann::json& j, const LossWeights& w);
void from_json(const nlohmann::json& j, LossWeights& w);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// Model + training settings that belong together.
struct Preset {
  ModelConfig model;
  TrainConfig train;
};

// Full-size configuration.
Preset default_preset();
// Scaled down to train within a few CPU hours: 1 s clips, 4 kHz band,
// narrow nets, batch 8.
Preset desk_preset();
Preset preset_by_name(const std::string& name);

struct LossInputs {
  torch::Tensor x;         // [B, N] clean audio
  torch::Tensor messages;  // [B, L] in {0, 1}
  // One spec for the whole batch or one per row.
  std::vector<DistortionSpec> benign;
  std::vector<DistortionSpec> malicious;
  // Per-row distortion randomness is derived from this seed.
  uint64_t seed = 0;
  // Reuse an already computed embed(x, messages).
  torch::Tensor watermarked;
};

struct LossResult {
  // Double-precision scalars; total = li*l_i + ld*l_d + lr*l_r - lf*l_f
  // evaluated in that order.
  torch::Tensor total, l_i, l_d, l_r, l_f;
  torch::Tensor watermarked;
  torch::Tensor benign_probs, malicious_probs;
  // Malicious-path audio fed to the extractor (gradient retained).
  torch::Tensor malicious_audio;
  double acc_benign = 0.0;
  double acc_malicious = 0.0;
  bool fragility_capped = false;
};

// Throws ContractViolation for non-differentiable specs.
LossResult composite_loss(const ModelBundle& model, const LossInputs& in,
                          const LossWeights& weights, double fragility_cap);

// Discriminator objective: BCE with original -> 0, watermarked -> 1.
torch::Tensor discriminator_loss(const ModelBundle& model, const torch::Tensor& x,
                                 const torch::Tensor& watermarked);

class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(const std::string& what, std::string dump_path)
      : std::runtime_error(what), dump_path_(std::move(dump_path)) {}
  const std::string& dump_path() const { return dump_path_; }

 private:
  std::string dump_path_;
};

struct StepMetrics {
  int64_t step = 0;
  double total = 0, l_i = 0, l_d = 0, l_r = 0, l_f = 0;
  double d_loss = 0;
  double acc_benign = 0, acc_malicious = 0;
  double gain = 0;
  double seconds = 0;
  std::vector<std::string> benign, malicious;
  std::optional<double> probe_snr_db;
  // Mean discriminator probability on watermarked minus on original audio.
  std::optional<double> probe_d_gap;
};

void to_json(nlohmann::json& j, const StepMetrics& m);

// Everything drawn for one step, derived from (seed, step) only.
struct StepDraws {
  torch::Tensor messages;
  std::vector<DistortionSpec> benign, malicious;
  uint64_t distortion_seed = 0;
};
StepDraws draw_step(const TrainConfig& cfg, int message_bits, int64_t step, int batch);

class Trainer {
 public:
  Trainer(ModelBundle model, TrainConfig cfg);

  // One discriminator update then one generator update on batch x [B, N].
  // `step()` counts completed steps.
  StepMetrics train_step(const torch::Tensor& x);
  int64_t step() const { return step_; }

  ModelBundle& model() { return model_; }
  const TrainConfig& config() const { return cfg_; }

  // Model, optimiser states, step counter and train config in one archive.
  void save(const std::filesystem::path& path) const;
  // Restores from save(). A stored train config different from `cfg`
  // (ignoring `steps`) throws ConfigError.
  static Trainer resume(const std::filesystem::path& path, const TrainConfig& cfg);

  // Where NonFiniteLoss dumps its inputs; empty uses the temp directory.
  void set_dump_dir(std::filesystem::path dir) { dump_dir_ = std::move(dir); }
  void set_probe(torch::Tensor probe) { probe_ = std::move(probe); }

 private:
  void fail_non_finite(const std::string& phase, const torch::Tensor& x, const StepDraws& draws,
                       const std::string& losses);

  ModelBundle model_;
  TrainConfig cfg_;
  std::unique_ptr<torch::optim::Adam> gen_opt_;
  std::unique_ptr<torch::optim::Adam> disc_opt_;
  int64_t step_ = 0;
  torch::Tensor probe_;
  std::filesystem::path dump_dir_;
};

struct FitOptions {
  std::filesystem::path out_dir;  // checkpoints and train_log.jsonl
  // Resume from out_dir/checkpoint_latest.pt when present.
  bool resume = true;
  // Stop after this many steps in this call (0: run to cfg.steps).
  int64_t max_new_steps = 0;
  std::function<void(const StepMetrics&)> on_step;
};

// Trains on the train split of `index`. Returns the final model; also
// leaves out_dir/checkpoint_latest.pt and out_dir/model.pt.
ModelBundle fit(const CorpusIndex& index, const ModelConfig& model_cfg, const TrainConfig& cfg,
                const FitOptions& options);

}  // namespace semimark

#endif  // SEMIMARK_TRAINING_HPP
