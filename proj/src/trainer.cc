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

#include "semalign/trainer.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>

#include <spdlog/spdlog.h>

#include "semalign/error.h"
#include "semalign/objectives.h"
#include "semalign/rng.h"

namespace semalign {

void DpoTrainConfig::validate() const {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (per_step_batch == 0 || grad_accum_steps == 0) {
    throw ConfigError("per_step_batch and grad_accum_steps must be positive");
  }
  if (!(peak_lr >= 0.0)) throw ConfigError("peak_lr must be non-negative");
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0)) {
    throw ConfigError("warmup_ratio must lie in [0, 1)");
  }
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (checkpoint_every == 0) throw ConfigError("checkpoint_every must be positive");
  if (adapter && (adapter->rank == 0 || !(adapter->alpha > 0.0))) {
    throw ConfigError("adapter rank and alpha must be positive");
  }
}

DpoTrainConfig DpoTrainConfig::full_scale() {
  DpoTrainConfig c;
  c.adapter = AdapterConfig{8, 32.0};
  return c;
}

DpoTrainConfig DpoTrainConfig::desk_scale() {
  DpoTrainConfig c;
  c.per_step_batch = 8;
  c.grad_accum_steps = 4;
  c.checkpoint_every = 1000;
  c.peak_lr = 3e-3;
  return c;
}

void apply_train_config(const nlohmann::json& j, DpoTrainConfig& c) {
  if (!j.is_object()) throw ConfigError("training config must be an object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "beta") c.beta = value.get<double>();
      else if (key == "per_step_batch") c.per_step_batch = value.get<std::size_t>();
      else if (key == "grad_accum_steps") c.grad_accum_steps = value.get<std::size_t>();
      else if (key == "peak_lr") c.peak_lr = value.get<double>();
      else if (key == "warmup_ratio") c.warmup_ratio = value.get<double>();
      else if (key == "schedule") {
        if (value.get<std::string>() != "cosine_anneal") {
          throw ConfigError("unsupported schedule '" + value.get<std::string>() + "'");
        }
      } else if (key == "epochs") c.epochs = value.get<std::size_t>();
      else if (key == "sample_budget") c.sample_budget = value.get<std::size_t>();
      else if (key == "checkpoint_every") c.checkpoint_every = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "weight_decay") c.weight_decay = value.get<double>();
      else if (key == "adam_beta1") c.adam_beta1 = value.get<double>();
      else if (key == "adam_beta2") c.adam_beta2 = value.get<double>();
      else if (key == "adam_eps") c.adam_eps = value.get<double>();
      else if (key == "adapter_rank" || key == "adapter_alpha") {
        if (!c.adapter) c.adapter = AdapterConfig{};
        if (key == "adapter_rank") c.adapter->rank = value.get<std::size_t>();
        else c.adapter->alpha = value.get<double>();
      } else if (key == "adapter") {
        if (value.is_null() || (value.is_boolean() && !value.get<bool>())) {
          c.adapter.reset();
        } else if (value.is_boolean()) {
          if (!c.adapter) c.adapter = AdapterConfig{};
        } else {
          throw ConfigError("'adapter' must be a boolean");
        }
      } else {
        throw ConfigError("unknown training config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad training config value: ") + e.what());
  }
}

nlohmann::ordered_json train_config_to_json(const DpoTrainConfig& c) {
  nlohmann::ordered_json j;
  j["beta"] = c.beta;
  j["per_step_batch"] = c.per_step_batch;
  j["grad_accum_steps"] = c.grad_accum_steps;
  j["peak_lr"] = c.peak_lr;
  j["warmup_ratio"] = c.warmup_ratio;
  j["schedule"] = "cosine_anneal";
  j["epochs"] = c.epochs;
  j["sample_budget"] = c.sample_budget;
  j["checkpoint_every"] = c.checkpoint_every;
  j["adapter"] = c.adapter.has_value();
  if (c.adapter) {
    j["adapter_rank"] = c.adapter->rank;
    j["adapter_alpha"] = c.adapter->alpha;
  }
  j["seed"] = c.seed;
  j["weight_decay"] = c.weight_decay;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_eps"] = c.adam_eps;
  return j;
}

double lr_at(std::size_t update, std::size_t total_updates,
             const DpoTrainConfig& config) {
  const auto warmup = static_cast<std::size_t>(
      std::ceil(config.warmup_ratio * static_cast<double>(total_updates)));
  if (update < warmup) {
    return config.peak_lr * static_cast<double>(update + 1) /
           static_cast<double>(warmup);
  }
  const std::size_t span = total_updates - 1 - std::min(warmup, total_updates - 1);
  const double progress =
      span == 0 ? 1.0
                : std::min(1.0, static_cast<double>(update - warmup) /
                                    static_cast<double>(span));
  return config.peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void save_train_log(const TrainLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& s : log.steps) {
    nlohmann::ordered_json j;
    j["step"] = s.step;
    j["update"] = s.update;
    j["loss"] = s.loss;
    j["mean_margin"] = s.mean_margin;
    j["lr"] = s.lr;
    j["samples_seen"] = s.samples_seen;
    out << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict)
        << '\n';
  }
}

TrainLog load_train_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  TrainLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      log.steps.push_back({j.at("step").get<std::size_t>(),
                           j.at("update").get<std::size_t>(),
                           j.at("loss").get<double>(),
                           j.at("mean_margin").get<double>(),
                           j.at("lr").get<double>(),
                           j.at("samples_seen").get<std::size_t>()});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path + ": " + e.what());
    }
  }
  return log;
}

WordTokenizer build_pair_tokenizer(const std::vector<PreferencePair>& pairs,
                                  std::span<const std::string> extra,
                                  std::size_t max_vocab) {
  std::vector<std::string> corpus;
  for (const auto& t : builtin_templates()) corpus.push_back(t.pattern());
  for (const auto& p : pairs) {
    corpus.push_back(p.prompt);
    corpus.push_back(p.chosen);
    corpus.push_back(p.rejected);
  }
  corpus.insert(corpus.end(), extra.begin(), extra.end());
  return WordTokenizer::build(corpus, max_vocab);
}

namespace {

class AdamW {
 public:
  AdamW(const DpoTrainConfig& c, const std::vector<ParameterView>& params)
      : config_(c) {
    for (const auto& p : params) {
      m_.emplace_back(p.value.size(), 0.0);
      v_.emplace_back(p.value.size(), 0.0);
    }
  }

  // grad_scale multiplies the accumulated gradients before the step.
  void step(std::vector<ParameterView>& params, double lr, double grad_scale) {
    ++t_;
    const double b1 = config_.adam_beta1;
    const double b2 = config_.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto value = params[i].value;
      auto grad = params[i].grad;
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t k = 0; k < value.size(); ++k) {
        const double g = grad[k] * grad_scale;
        m[k] = b1 * m[k] + (1.0 - b1) * g;
        v[k] = b2 * v[k] + (1.0 - b2) * g * g;
        const double update = (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.adam_eps);
        value[k] -= lr * (update + config_.weight_decay * value[k]);
      }
    }
  }

 private:
  const DpoTrainConfig& config_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace

TrainResult train_dpo(TrainableScorer& policy,
                      const std::vector<PreferencePair>& pairs,
                      const DpoTrainConfig& config,
                      const std::string& checkpoint_dir) {
  config.validate();
  if (policy.mode() != ScorerMode::kTrainable) {
    throw TrainingError("policy must be trainable");
  }
  if (pairs.empty()) throw TrainingError("no preference pairs");

  TrainResult result;
  result.reference = policy.snapshot_frozen();
  const CausalScorer& reference = *result.reference;

  // Reference log-probabilities never change, so they are computed once.
  // This pass also screens out pairs that do not fit the context.
  std::vector<std::size_t> usable;
  std::vector<double> ref_chosen(pairs.size()), ref_rejected(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    try {
      ref_chosen[i] = reference.sequence_logprob(pairs[i].prompt, pairs[i].chosen);
      ref_rejected[i] =
          reference.sequence_logprob(pairs[i].prompt, pairs[i].rejected);
      usable.push_back(i);
    } catch (const LengthError& e) {
      spdlog::warn("skipping pair {}: {}", i, e.what());
      ++result.skipped_pairs;
    }
  }
  if (usable.empty()) throw TrainingError("every preference pair was skipped");

  const std::size_t steps_per_epoch =
      (usable.size() + config.per_step_batch - 1) / config.per_step_batch;
  std::size_t total_steps = steps_per_epoch * config.epochs;
  if (config.sample_budget > 0) {
    total_steps = std::min(
        total_steps,
        (config.sample_budget + config.per_step_batch - 1) / config.per_step_batch);
  }
  const std::size_t total_updates =
      (total_steps + config.grad_accum_steps - 1) / config.grad_accum_steps;
  result.optimizer_updates = total_updates;

  auto params = policy.trainable_parameters();
  AdamW optimizer(config, params);
  policy.zero_grad();

  if (!checkpoint_dir.empty()) std::filesystem::create_directories(checkpoint_dir);

  Rng rng(config.seed);
  std::vector<std::size_t> order = usable;
  std::size_t step = 0;
  std::size_t samples_seen = 0;
  std::size_t in_window = 0;
  std::size_t update = 0;
  std::size_t next_checkpoint = config.checkpoint_every;
  const std::size_t sample_cap =
      config.sample_budget > 0 ? config.sample_budget : SIZE_MAX;

  for (std::size_t epoch = 0; epoch < config.epochs && step < total_steps; ++epoch) {
    rng.shuffle(order);
    for (std::size_t begin = 0; begin < order.size() && step < total_steps;
         begin += config.per_step_batch) {
      const std::size_t end = std::min({begin + config.per_step_batch,
                                        order.size(),
                                        begin + (sample_cap - samples_seen)});
      DpoBatchLogps batch;
      batch.beta = config.beta;
      std::vector<std::unique_ptr<LogprobTape>> tapes;
      for (std::size_t b = begin; b < end; ++b) {
        const auto& pair = pairs[order[b]];
        tapes.push_back(policy.record_sequence_logprob(pair.prompt, pair.chosen));
        batch.policy_chosen.push_back(tapes.back()->value());
        tapes.push_back(policy.record_sequence_logprob(pair.prompt, pair.rejected));
        batch.policy_rejected.push_back(tapes.back()->value());
        batch.ref_chosen.push_back(ref_chosen[order[b]]);
        batch.ref_rejected.push_back(ref_rejected[order[b]]);
      }
      const auto loss = dpo_loss(batch);
      const auto grad = dpo_loss_gradient(batch);
      for (std::size_t b = 0; b < batch.size(); ++b) {
        tapes[2 * b]->backward(grad.policy_chosen[b]);
        tapes[2 * b + 1]->backward(grad.policy_rejected[b]);
      }
      tapes.clear();

      samples_seen += batch.size();
      const double lr = lr_at(update, total_updates, config);
      result.log.steps.push_back(
          {step, update, loss.loss,
           std::accumulate(loss.margins.begin(), loss.margins.end(), 0.0) /
               static_cast<double>(loss.margins.size()),
           lr, samples_seen});
      ++step;
      ++in_window;

      if (in_window == config.grad_accum_steps || step == total_steps) {
        optimizer.step(params, lr, 1.0 / static_cast<double>(in_window));
        policy.zero_grad();
        in_window = 0;
        ++update;
        if (samples_seen >= next_checkpoint) {
          CheckpointRecord rec{samples_seen, ""};
          if (!checkpoint_dir.empty()) {
            rec.path = (std::filesystem::path(checkpoint_dir) /
                        ("checkpoint-" + std::to_string(samples_seen) + ".ckpt"))
                           .string();
            policy.save(rec.path);
          }
          result.checkpoints.push_back(rec);
          next_checkpoint =
              (samples_seen / config.checkpoint_every + 1) * config.checkpoint_every;
        }
      }
    }
  }
  return result;
}

}  // namespace semalign
