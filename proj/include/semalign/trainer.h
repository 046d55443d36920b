// Copyright 2026 The semalign Authors.
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

#ifndef SEMALIGN_TRAINER_H_
#define SEMALIGN_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "semalign/core.h"
#include "semalign/scorer.h"
#include "semalign/tiny_transformer.h"

namespace semalign {

enum class LrSchedule { kCosineAnneal };

struct DpoTrainConfig {
  double beta = 0.1;
  std::size_t per_step_batch = 8;
  std::size_t grad_accum_steps = 8;
  double peak_lr = 1e-4;
  double warmup_ratio = 0.05;
  LrSchedule schedule = LrSchedule::kCosineAnneal;
  std::size_t epochs = 1;
  std::size_t sample_budget = 0;  // 0: no cap beyond epochs
  std::size_t checkpoint_every = 20000;  // samples
  std::optional<AdapterConfig> adapter;
  std::uint64_t seed = 0;

  // AdamW
  double weight_decay = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  std::size_t effective_batch() const {
    return per_step_batch * grad_accum_steps;
  }
  void validate() const;

  // Full-scale defaults: batch 8 x 8 accumulation steps, peak 1e-4, 5%
  // warmup, cosine decay, a checkpoint every 20K samples, rank-8 adapters
  // with alpha 32.
  static DpoTrainConfig full_scale();
  // Defaults for the built-in tiny backend: effective batch 32, peak 3e-3,
  // a checkpoint every 1K samples, full fine-tuning.
  static DpoTrainConfig desk_scale();
};

// Applies the keys present in `j` on top of `config`. Throws ConfigError on
// unknown keys or wrong types.
void apply_train_config(const nlohmann::json& j, DpoTrainConfig& config);
nlohmann::ordered_json train_config_to_json(const DpoTrainConfig& config);

// Learning rate for optimizer update `update` of `total_updates`: linear
// ramp peak * (u + 1) / W over W = ceil(warmup_ratio * total) updates, then
// peak * 0.5 * (1 + cos(pi * p)) with p running from 0 at update W to 1 at
// the last update.
double lr_at(std::size_t update, std::size_t total_updates,
             const DpoTrainConfig& config);

struct TrainStep {
  std::size_t step = 0;    // micro-batch index
  std::size_t update = 0;  // optimizer update this micro-batch feeds
  double loss = 0.0;
  double mean_margin = 0.0;
  double lr = 0.0;
  std::size_t samples_seen = 0;

  bool operator==(const TrainStep&) const = default;
};

struct TrainLog {
  std::vector<TrainStep> steps;
};

void save_train_log(const TrainLog& log, const std::string& path);
TrainLog load_train_log(const std::string& path);

struct CheckpointRecord {
  std::size_t samples_seen = 0;
  std::string path;  // empty when no checkpoint directory was given
};

struct TrainResult {
  TrainLog log;
  std::vector<CheckpointRecord> checkpoints;
  std::size_t skipped_pairs = 0;
  std::size_t optimizer_updates = 0;
  // The frozen copy of the initial policy used as the reference.
  std::unique_ptr<CausalScorer> reference;
};

// Sentence-level DPO. The reference is snapshotted from `policy` once
// before the first step. Each micro-batch of per_step_batch pairs adds the
// gradient of its mean DPO loss; every grad_accum_steps micro-batches the
// averaged gradient is applied with AdamW. Pairs that do not fit the
// context are skipped with a warning; TrainingError if none remain.
// Checkpoints are written to checkpoint_dir (if non-empty) as
// checkpoint-<samples>.ckpt after the update that crosses each multiple of
// checkpoint_every samples.
// Vocabulary for a fresh tiny model: the built-in template patterns, every
// prompt and response, and any extra text (for example evaluation
// sentences).
WordTokenizer build_pair_tokenizer(const std::vector<PreferencePair>& pairs,
                                  std::span<const std::string> extra = {},
                                  std::size_t max_vocab = 4096);

TrainResult train_dpo(TrainableScorer& policy,
                      const std::vector<PreferencePair>& pairs,
                      const DpoTrainConfig& config,
                      const std::string& checkpoint_dir = "");

}  // namespace semalign

#endif  // SEMALIGN_TRAINER_H_
