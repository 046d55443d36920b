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

#include "semalign/evaluation.h"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "semalign/error.h"

namespace semalign {

void StsPairSet::validate() const {
  if (records.size() < 2) {
    throw FormatError("STS set '" + name + "' needs at least 2 records");
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!std::isfinite(records[i].gold)) {
      throw FormatError("STS set '" + name + "': non-finite gold at record " +
                        std::to_string(i));
    }
  }
}

StsPairSet load_sts_tsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  StsPairSet set;
  set.name = std::filesystem::path(path).stem().string();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": expected sentence1<TAB>sentence2<TAB>gold");
    }
    const std::string gold_text(trim(std::string_view(line).substr(t2 + 1)));
    double gold = 0.0;
    auto [ptr, ec] = std::from_chars(gold_text.data(),
                                     gold_text.data() + gold_text.size(), gold);
    if (ec != std::errc() || ptr != gold_text.data() + gold_text.size()) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": bad gold score '" +
                        gold_text + "'");
    }
    set.records.push_back({line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), gold});
  }
  set.validate();
  return set;
}

void save_sts_tsv(const StsPairSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& r : set.records) {
    out << r.sentence1 << '\t' << r.sentence2 << '\t' << r.gold << '\n';
  }
}

StsResult eval_sts(const CausalScorer& model, const PromptTemplate& tmpl,
                   const StsPairSet& pairs, const EmbedOptions& options) {
  pairs.validate();
  std::vector<Sentence> left, right;
  std::vector<double> gold;
  for (const auto& r : pairs.records) {
    left.emplace_back(r.sentence1);
    right.emplace_back(r.sentence2);
    gold.push_back(r.gold);
  }
  const auto a = embed_corpus(model, tmpl, left, options);
  const auto b = embed_corpus(model, tmpl, right, options);
  StsResult result;
  for (std::size_t i = 0; i < left.size(); ++i) {
    result.cosines.push_back(cosine_similarity(a.row(i), b.row(i)));
  }
  result.spearman_x100 = 100.0 * spearman(result.cosines, gold);
  return result;
}

AlignedTokenReport aligned_token_report(const CausalScorer& model,
                                        const PromptTemplate& tmpl,
                                        std::span<const Sentence> sentences,
                                        std::size_t k,
                                        const TokenNormalizer& normalizer,
                                        const EmbedOptions& options) {
  if (k > model.vocab_size()) {
    throw ArgumentError("k=" + std::to_string(k) + " exceeds vocabulary size " +
                        std::to_string(model.vocab_size()));
  }
  const auto emb = embed_corpus(model, tmpl, sentences, options);
  AlignedTokenReport report;
  report.k = k;
  std::vector<GarInput> inputs;
  const Tokenizer& tok = model.tokenizer();
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    SentenceAlignment sa;
    sa.sentence = sentences[i].text();
    sa.top_tokens = unembed_topk(model, emb.row(i).vector, k);
    for (TokenId id : tok.encode(sa.sentence)) sa.surface.insert(tok.piece(id));
    GarInput in{sa.surface, {}, k};
    for (const auto& t : sa.top_tokens) in.aligned.insert(t.piece);
    for (const auto& t : in.aligned) {
      if (sa.surface.contains(t)) sa.hits.insert(t);
    }
    inputs.push_back(std::move(in));
    report.sentences.push_back(std::move(sa));
  }
  report.gar = gar(inputs, normalizer);
  return report;
}

std::string metric_record_line(const MetricRecord& r) {
  nlohmann::ordered_json j;
  j["metric"] = r.metric;
  j["dataset"] = r.dataset;
  j["value"] = r.value;
  if (!r.model.empty()) j["model"] = r.model;
  return j.dump();
}

void append_metric_records(const std::vector<MetricRecord>& records,
                           const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot open '" + path + "' for appending");
  for (const auto& r : records) out << metric_record_line(r) << '\n';
}

std::vector<MetricRecord> load_metric_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<MetricRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("metric").get<std::string>(),
                     j.at("dataset").get<std::string>(),
                     j.at("value").get<double>(), j.value("model", "")});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace semalign
