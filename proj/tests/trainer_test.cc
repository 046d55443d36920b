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

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <filesystem>

#include "semalign/data.h"
#include "semalign/error.h"
#include "semalign/synthetic.h"
#include "testing.h"

using namespace semalign;
using Catch::Approx;

namespace {

std::vector<PreferencePair> toy_pairs(std::size_t n) {
  const auto corpus = make_synthetic({n, 0, 3});
  return build_preference_pairs(corpus.nli, builtin_templates().front()).pairs;
}

TinyTransformer model_for(const std::vector<PreferencePair>& pairs,
                          std::uint64_t seed = 1) {
  auto cfg = testing::toy_config(seed);
  cfg.max_seq_len = 48;
  return TinyTransformer(cfg, build_pair_tokenizer(pairs));
}

DpoTrainConfig small_config() {
  auto c = DpoTrainConfig::desk_scale();
  c.per_step_batch = 4;
  c.grad_accum_steps = 2;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("learning-rate schedule", "[trainer]") {
  DpoTrainConfig c;
  c.peak_lr = 1.0;
  c.warmup_ratio = 0.05;
  // 100 updates: 5 warmup updates, then cosine over the remaining 95.
  CHECK(lr_at(0, 100, c) == Approx(0.2));
  CHECK(lr_at(4, 100, c) == Approx(1.0));
  CHECK(lr_at(5, 100, c) == Approx(1.0));
  CHECK(lr_at(99, 100, c) == Approx(0.0).margin(1e-15));
  CHECK(lr_at(52, 100, c) == Approx(0.5 * (1 + std::cos(M_PI * 47.0 / 94.0))));
  for (std::size_t u = 6; u < 100; ++u) CHECK(lr_at(u, 100, c) <= lr_at(u - 1, 100, c));
  c.warmup_ratio = 0.0;
  CHECK(lr_at(0, 1, c) == Approx(0.0).margin(1e-15));
  CHECK(lr_at(0, 10, c) == Approx(1.0));
}

TEST_CASE("config defaults and JSON", "[trainer]") {
  const auto full = DpoTrainConfig::full_scale();
  CHECK(full.effective_batch() == 64);
  CHECK(full.peak_lr == 1e-4);
  CHECK(full.checkpoint_every == 20000);
  REQUIRE(full.adapter.has_value());
  CHECK(full.adapter->rank == 8);
  CHECK(full.adapter->alpha == 32.0);
  const auto desk = DpoTrainConfig::desk_scale();
  CHECK(desk.effective_batch() == 32);
  CHECK(desk.checkpoint_every == 1000);
  CHECK_FALSE(desk.adapter.has_value());
  CHECK(desk.beta == 0.1);

  DpoTrainConfig back = DpoTrainConfig::desk_scale();
  apply_train_config(train_config_to_json(full), back);
  CHECK(train_config_to_json(back) == train_config_to_json(full));
  CHECK_THROWS_AS(apply_train_config({{"lr", 1.0}}, back), ConfigError);
  CHECK_THROWS_AS(apply_train_config({{"beta", "x"}}, back), ConfigError);
  DpoTrainConfig bad;
  bad.warmup_ratio = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("training contracts on the tiny model", "[trainer]") {
  const auto pairs = toy_pairs(24);
  auto a = model_for(pairs);
  const double probe = a.sequence_logprob(pairs[0].prompt, pairs[0].chosen);
  const auto ra = train_dpo(a, pairs, small_config());
  REQUIRE(ra.log.steps.size() == 6);
  CHECK(ra.optimizer_updates == 3);
  CHECK(std::abs(ra.log.steps[0].loss - std::log(2.0)) <= 1e-6);
  CHECK(ra.reference->sequence_logprob(pairs[0].prompt, pairs[0].chosen) == probe);
  CHECK(a.sequence_logprob(pairs[0].prompt, pairs[0].chosen) != probe);
  for (std::size_t i = 0; i < ra.log.steps.size(); ++i) {
    const auto& s = ra.log.steps[i];
    CHECK(s.step == i);
    CHECK(s.update == i / 2);
    CHECK(s.samples_seen == 4 * (i + 1));
  }

  auto b = model_for(pairs);
  const auto rb = train_dpo(b, pairs, small_config());
  CHECK(rb.log.steps == ra.log.steps);
  CHECK(b.weights().unembedding == a.weights().unembedding);
}

TEST_CASE("accumulation averages micro-batches", "[trainer]") {
  const auto pairs = toy_pairs(16);
  auto one = model_for(pairs);
  auto two = model_for(pairs);
  auto c1 = small_config();
  c1.per_step_batch = 8;
  c1.grad_accum_steps = 1;
  auto c2 = small_config();
  c2.per_step_batch = 4;
  c2.grad_accum_steps = 2;
  train_dpo(one, pairs, c1);
  train_dpo(two, pairs, c2);
  CHECK((one.weights().unembedding - two.weights().unembedding).cwiseAbs().maxCoeff() <
        1e-10);
}

TEST_CASE("checkpoints reproduce the policy", "[trainer]") {
  testing::TempDir dir("train");
  const auto pairs = toy_pairs(24);
  auto m = model_for(pairs);
  auto c = small_config();
  c.checkpoint_every = 10;
  c.sample_budget = 20;
  const auto r = train_dpo(m, pairs, c, dir.file("ckpt"));
  CHECK(r.log.steps.back().samples_seen == 20);
  REQUIRE(r.checkpoints.size() == 2);
  CHECK(r.checkpoints[0].samples_seen == 16);
  CHECK(r.checkpoints[1].samples_seen == 20);
  const auto last = TinyTransformer::load(r.checkpoints[1].path);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(last.sequence_logprob(pairs[i].prompt, pairs[i].rejected) ==
          m.sequence_logprob(pairs[i].prompt, pairs[i].rejected));
  }
  save_train_log(r.log, dir.file("log.jsonl"));
  CHECK(load_train_log(dir.file("log.jsonl")).steps == r.log.steps);
}

TEST_CASE("oversized pairs are skipped", "[trainer]") {
  auto pairs = toy_pairs(8);
  auto m = model_for(pairs);
  std::string huge;
  for (int i = 0; i < 60; ++i) huge += " dog";
  pairs.push_back({"x", huge, "y"});
  const auto r = train_dpo(m, pairs, small_config());
  CHECK(r.skipped_pairs == 1);
  const std::vector<PreferencePair> only = {{"x", huge, "y"}};
  CHECK_THROWS_AS(train_dpo(m, only, small_config()), TrainingError);
  CHECK_THROWS_AS(train_dpo(m, {}, small_config()), TrainingError);
}
