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

#ifndef SEMALIGN_EMBEDDER_H_
#define SEMALIGN_EMBEDDER_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "semalign/core.h"
#include "semalign/scorer.h"

namespace semalign {

enum class Pooling {
  kLastToken,  // hidden state of the final template token
  kMean,       // mean over all positions of the filled template (baseline)
};

struct SentenceEmbedding {
  Eigen::VectorXd vector;
  std::string model_tag;
  std::string template_tag;
};

// n x d, row i belongs to sentence i.
struct EmbeddingMatrix {
  Eigen::MatrixXd rows;
  std::string model_tag;
  std::string template_tag;

  std::size_t n() const { return static_cast<std::size_t>(rows.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(rows.cols()); }
  SentenceEmbedding row(std::size_t i) const {
    return {rows.row(static_cast<Eigen::Index>(i)).transpose(), model_tag,
            template_tag};
  }
};

struct EmbedOptions {
  Pooling pooling = Pooling::kLastToken;
  std::string model_tag;
  // Worker threads for embed_corpus; 0 picks hardware concurrency. Row
  // placement does not depend on the thread count.
  std::size_t threads = 1;
};

// Throws ConfigError for a paraphrase-instruction template.
SentenceEmbedding embed(const CausalScorer& model, const PromptTemplate& tmpl,
                        const Sentence& sentence,
                        const EmbedOptions& options = {});

// Per-sentence failures are rethrown with the sentence index.
EmbeddingMatrix embed_corpus(const CausalScorer& model,
                             const PromptTemplate& tmpl,
                             std::span<const Sentence> sentences,
                             const EmbedOptions& options = {});

double cosine_similarity(const SentenceEmbedding& a, const SentenceEmbedding& b);

// Binary layout, little-endian:
//   "SAEMB001", u64 n, u64 d, u32 length + model_tag bytes,
//   u32 length + template_tag bytes, then n * d float64 values row-major.
void save_embeddings(const EmbeddingMatrix& m, const std::string& path);
EmbeddingMatrix load_embeddings(const std::string& path);

}  // namespace semalign

#endif  // SEMALIGN_EMBEDDER_H_
