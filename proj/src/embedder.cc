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

#include "semalign/embedder.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <thread>

#include "semalign/error.h"
#include "semalign/vector_ops.h"

namespace semalign {

namespace {

constexpr char kMagic[8] = {'S', 'A', 'E', 'M', 'B', '0', '0', '1'};

void put_le(std::ostream& out, std::uint64_t v, int bytes) {
  char b[8];
  for (int i = 0; i < bytes; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, bytes);
}

std::uint64_t get_le(std::istream& in, int bytes) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), bytes)) {
    throw FormatError("truncated embedding file");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void check_extraction(const PromptTemplate& tmpl) {
  if (tmpl.kind() != TemplateKind::kEmbeddingExtraction) {
    throw ConfigError("template '" + tmpl.name() +
                      "' is not an embedding-extraction template");
  }
}

Eigen::VectorXd extract(const CausalScorer& model, const PromptTemplate& tmpl,
                        const Sentence& sentence, Pooling pooling) {
  const std::string text = fill_template(tmpl, sentence);
  Eigen::VectorXd v = pooling == Pooling::kLastToken
                          ? model.last_token_hidden(text)
                          : model.mean_hidden(text);
  if (!v.allFinite()) throw NumericError("non-finite embedding component");
  return v;
}

}  // namespace

SentenceEmbedding embed(const CausalScorer& model, const PromptTemplate& tmpl,
                        const Sentence& sentence, const EmbedOptions& options) {
  check_extraction(tmpl);
  return {extract(model, tmpl, sentence, options.pooling), options.model_tag,
          tmpl.name()};
}

EmbeddingMatrix embed_corpus(const CausalScorer& model,
                             const PromptTemplate& tmpl,
                             std::span<const Sentence> sentences,
                             const EmbedOptions& options) {
  check_extraction(tmpl);
  if (sentences.empty()) throw ArgumentError("no sentences to embed");
  EmbeddingMatrix out;
  out.model_tag = options.model_tag;
  out.template_tag = tmpl.name();
  out.rows.resize(static_cast<Eigen::Index>(sentences.size()),
                  static_cast<Eigen::Index>(model.hidden_dim()));

  std::size_t threads = options.threads == 0
                            ? std::max(1u, std::thread::hardware_concurrency())
                            : options.threads;
  threads = std::min(threads, sentences.size());

  struct Failure {
    std::size_t index;
    std::string kind;
    std::string message;
  };
  std::vector<std::optional<Failure>> failures(threads);
  auto work = [&](std::size_t worker) {
    for (std::size_t i = worker; i < sentences.size(); i += threads) {
      try {
        out.rows.row(static_cast<Eigen::Index>(i)) =
            extract(model, tmpl, sentences[i], options.pooling).transpose();
      } catch (const Error& e) {
        failures[worker] = Failure{i, e.kind(), e.what()};
        return;
      }
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work, w);
  }
  std::optional<Failure> first;
  for (const auto& f : failures) {
    if (f && (!first || f->index < first->index)) first = f;
  }
  if (first) {
    throw Error(first->kind, "sentence " + std::to_string(first->index) + ": " +
                                 first->message);
  }
  return out;
}

double cosine_similarity(const SentenceEmbedding& a,
                         const SentenceEmbedding& b) {
  return cosine(a.vector, b.vector);
}

void save_embeddings(const EmbeddingMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof(kMagic));
  put_le(out, m.n(), 8);
  put_le(out, m.d(), 8);
  for (const std::string* tag : {&m.model_tag, &m.template_tag}) {
    put_le(out, tag->size(), 4);
    out.write(tag->data(), static_cast<std::streamsize>(tag->size()));
  }
  for (Eigen::Index r = 0; r < m.rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.rows.cols(); ++c) {
      put_le(out, std::bit_cast<std::uint64_t>(m.rows(r, c)), 8);
    }
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

EmbeddingMatrix load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw FormatError("'" + path + "' is not an embedding file");
  }
  EmbeddingMatrix m;
  const auto n = get_le(in, 8);
  const auto d = get_le(in, 8);
  for (std::string* tag : {&m.model_tag, &m.template_tag}) {
    tag->resize(get_le(in, 4));
    if (!in.read(tag->data(), static_cast<std::streamsize>(tag->size()))) {
      throw FormatError("truncated embedding file '" + path + "'");
    }
  }
  m.rows.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < m.rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.rows.cols(); ++c) {
      m.rows(r, c) = std::bit_cast<double>(get_le(in, 8));
    }
  }
  return m;
}

}  // namespace semalign
