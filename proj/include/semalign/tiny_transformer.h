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

#ifndef SEMALIGN_TINY_TRANSFORMER_H_
#define SEMALIGN_TINY_TRANSFORMER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "semalign/scorer.h"
#include "semalign/tokenizer.h"

namespace semalign {

struct AdapterConfig {
  std::size_t rank = 8;
  double alpha = 32.0;

  double scale() const { return alpha / static_cast<double>(rank); }
};

struct TinyTransformerConfig {
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t hidden_dim = 64;
  std::size_t mlp_dim = 0;  // 0 means 4 * hidden_dim
  std::size_t max_seq_len = 96;
  std::uint64_t seed = 0;
  double embedding_std = 1.0;
  double norm_eps = 1e-6;
  // When set, only low-rank adapters on the attention and MLP projections
  // are trainable; embeddings, norms and the output layer stay fixed.
  std::optional<AdapterConfig> adapter;

  std::size_t effective_mlp_dim() const {
    return mlp_dim == 0 ? 4 * hidden_dim : mlp_dim;
  }
  // Throws ConfigError on inconsistent sizes.
  void validate() const;
};

struct LinearWeights {
  Eigen::MatrixXd w;       // out x in
  Eigen::MatrixXd b;       // out x 1, or empty
  Eigen::MatrixXd lora_a;  // rank x in, or empty
  Eigen::MatrixXd lora_b;  // out x rank, or empty
};

struct BlockWeights {
  Eigen::MatrixXd attn_norm;  // d x 1
  LinearWeights q, k, v, o;
  Eigen::MatrixXd mlp_norm;  // d x 1
  LinearWeights fc1, fc2;
};

struct TransformerWeights {
  Eigen::MatrixXd token_embedding;     // vocab x d
  Eigen::MatrixXd position_embedding;  // max_seq_len x d
  std::vector<BlockWeights> blocks;
  Eigen::MatrixXd final_norm;  // d x 1
  Eigen::MatrixXd unembedding;  // vocab x d
};

// Calls f(name, tensor, is_adapter) for every tensor in a fixed order.
// Empty tensors are skipped.
void for_each_tensor(
    TransformerWeights& w,
    const std::function<void(const std::string&, Eigen::MatrixXd&, bool)>& f);

// Pre-norm decoder-only transformer with learned positions, RMSNorm,
// multi-head causal attention and a GELU MLP. Double precision throughout;
// single-threaded and deterministic.
class TinyTransformer final : public TrainableScorer {
 public:
  TinyTransformer(TinyTransformerConfig config, WordTokenizer tokenizer);

  static TinyTransformer load(const std::string& path);
  void save(const std::string& path) const override;

  const TinyTransformerConfig& config() const { return config_; }
  TransformerWeights& weights() { return weights_; }
  const TransformerWeights& weights() const { return weights_; }
  const TransformerWeights& gradients() const { return grads_; }

  const Tokenizer& tokenizer() const override { return tokenizer_; }
  const WordTokenizer& word_tokenizer() const { return tokenizer_; }
  std::size_t vocab_size() const override { return tokenizer_.vocab_size(); }
  std::size_t hidden_dim() const override { return config_.hidden_dim; }
  std::size_t num_layers() const override { return config_.layers; }
  std::size_t max_seq_len() const override { return config_.max_seq_len; }
  ScorerMode mode() const override { return mode_; }

  double sequence_logprob(std::string_view prompt,
                          std::string_view response) const override;
  Eigen::VectorXd last_token_hidden(std::string_view text) const override;
  Eigen::VectorXd mean_hidden(std::string_view text) const override;
  Eigen::VectorXd unembed(const Eigen::VectorXd& hidden) const override;
  std::unique_ptr<CausalScorer> snapshot_frozen() const override;

  std::unique_ptr<LogprobTape> record_sequence_logprob(
      std::string_view prompt, std::string_view response) override;
  std::vector<ParameterView> trainable_parameters() override;
  void zero_grad() override;

  // Final-layer hidden states (after the final norm) for a token sequence,
  // one row per position. Exposed for tests.
  Eigen::MatrixXd hidden_states(const std::vector<TokenId>& ids) const;
  // Logits for every position, one row per position.
  Eigen::MatrixXd logits(const std::vector<TokenId>& ids) const;

  void set_mode(ScorerMode mode) { mode_ = mode; }

 private:
  struct Forward;
  class Tape;

  std::vector<TokenId> pair_ids(std::string_view prompt,
                                std::string_view response,
                                std::size_t* response_start) const;
  std::vector<TokenId> text_ids(std::string_view text) const;
  void run_forward(const std::vector<TokenId>& ids, Forward& fw) const;
  void run_backward(const std::vector<TokenId>& ids, const Forward& fw,
                    const Eigen::MatrixXd& d_final);
  double response_logprob(const std::vector<TokenId>& ids, std::size_t start,
                          const Forward& fw, Eigen::MatrixXd* d_final,
                          double upstream) const;

  TinyTransformerConfig config_;
  WordTokenizer tokenizer_;
  TransformerWeights weights_;
  TransformerWeights grads_;
  ScorerMode mode_ = ScorerMode::kTrainable;
};

}  // namespace semalign

#endif  // SEMALIGN_TINY_TRANSFORMER_H_
