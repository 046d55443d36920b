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

#ifndef SEMALIGN_EVALUATION_H_
#define SEMALIGN_EVALUATION_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "semalign/core.h"
#include "semalign/embedder.h"
#include "semalign/metrics.h"
#include "semalign/scorer.h"

namespace semalign {

struct StsRecord {
  std::string sentence1;
  std::string sentence2;
  double gold = 0.0;
};

// Gold scores keep their native scale; Spearman does not need rescaling.
struct StsPairSet {
  std::string name;
  std::vector<StsRecord> records;

  // Throws FormatError for fewer than 2 records or a non-finite gold score.
  void validate() const;
};

// Tab-separated "sentence1<TAB>sentence2<TAB>gold" records, no header. The
// set is named after the file stem.
StsPairSet load_sts_tsv(const std::string& path);
void save_sts_tsv(const StsPairSet& set, const std::string& path);

struct StsResult {
  double spearman_x100 = 0.0;
  std::vector<double> cosines;  // one per record
};

// Embeds both sides, scores each record by cosine similarity and returns
// Spearman(cosines, gold) * 100.
StsResult eval_sts(const CausalScorer& model, const PromptTemplate& tmpl,
                   const StsPairSet& pairs, const EmbedOptions& options = {});

struct SentenceAlignment {
  std::string sentence;
  std::vector<ScoredToken> top_tokens;
  std::set<std::string> surface;
  std::set<std::string> hits;
};

struct AlignedTokenReport {
  std::vector<SentenceAlignment> sentences;
  double gar = 0.0;
  std::size_t k = 10;
};

// Surface sets come from tokenizing each raw sentence; aligned sets are the
// top-k unembedded tokens of its extraction embedding.
AlignedTokenReport aligned_token_report(
    const CausalScorer& model, const PromptTemplate& tmpl,
    std::span<const Sentence> sentences, std::size_t k = 10,
    const TokenNormalizer& normalizer = {}, const EmbedOptions& options = {});

// One line-delimited JSON object per metric value.
struct MetricRecord {
  std::string metric;
  std::string dataset;
  double value = 0.0;
  std::string model;  // optional row label for reports

  bool operator==(const MetricRecord&) const = default;
};

void append_metric_records(const std::vector<MetricRecord>& records,
                           const std::string& path);
std::vector<MetricRecord> load_metric_records(const std::string& path);
std::string metric_record_line(const MetricRecord& record);

}  // namespace semalign

#endif  // SEMALIGN_EVALUATION_H_
