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

#ifndef SEMALIGN_SCORER_H_
#define SEMALIGN_SCORER_H_

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "semalign/tokenizer.h"

namespace semalign {

enum class ScorerMode { kTrainable, kFrozen };

struct ScoredToken {
  TokenId id;
  std::string piece;
  double score;
};

// A causal language model as seen by the rest of the toolkit. Any engine
// that honours these contracts can be plugged in; the toolkit ships
// TinyTransformer.
//
// Sequence scoring: the input is <bos> + encode(prompt) + encode(response).
// Only response tokens contribute to sequence_logprob, so the value is the
// token-sum log P(response | prompt) and is <= 0.
class CausalScorer {
 public:
  virtual ~CausalScorer() = default;

  virtual const Tokenizer& tokenizer() const = 0;
  virtual std::size_t vocab_size() const = 0;
  virtual std::size_t hidden_dim() const = 0;
  virtual std::size_t num_layers() const = 0;
  virtual std::size_t max_seq_len() const = 0;
  virtual ScorerMode mode() const = 0;

  // Throws LengthError when the tokenized pair does not fit max_seq_len.
  virtual double sequence_logprob(std::string_view prompt,
                                  std::string_view response) const = 0;

  // Final-layer hidden state (after the final normalization) at the last
  // position of <bos> + encode(text). Throws ArgumentError if text encodes
  // to zero tokens.
  virtual Eigen::VectorXd last_token_hidden(std::string_view text) const = 0;

  // Mean of the final-layer hidden states over the text positions.
  virtual Eigen::VectorXd mean_hidden(std::string_view text) const = 0;

  // Output-layer logits for a hidden state of dimension hidden_dim().
  virtual Eigen::VectorXd unembed(const Eigen::VectorXd& hidden) const = 0;

  // Deep copy in frozen mode; later changes to *this never affect it.
  virtual std::unique_ptr<CausalScorer> snapshot_frozen() const = 0;
};

// View of one trainable tensor: values and the gradient accumulator.
struct ParameterView {
  std::string name;
  std::span<double> value;
  std::span<double> grad;
};

// Recorded forward pass of one sequence_logprob evaluation. backward()
// adds upstream * d(logprob)/d(theta) to the owning scorer's gradient
// accumulators; the scorer must outlive the tape and must not be updated
// in between.
class LogprobTape {
 public:
  virtual ~LogprobTape() = default;
  virtual double value() const = 0;
  virtual void backward(double upstream) = 0;
};

class TrainableScorer : public CausalScorer {
 public:
  // Throws TrainingError if the scorer is frozen.
  virtual std::unique_ptr<LogprobTape> record_sequence_logprob(
      std::string_view prompt, std::string_view response) = 0;

  double sequence_logprob_backward(std::string_view prompt,
                                   std::string_view response,
                                   double upstream) {
    auto tape = record_sequence_logprob(prompt, response);
    tape->backward(upstream);
    return tape->value();
  }

  virtual std::vector<ParameterView> trainable_parameters() = 0;
  virtual void zero_grad() = 0;
  virtual void save(const std::string& path) const = 0;
};

// The k highest-logit tokens for `embedding`, descending by score with ties
// broken by ascending token id. Throws ArgumentError when k exceeds the
// vocabulary or the dimension does not match.
std::vector<ScoredToken> unembed_topk(const CausalScorer& model,
                                      const Eigen::VectorXd& embedding,
                                      std::size_t k);

}  // namespace semalign

#endif  // SEMALIGN_SCORER_H_
