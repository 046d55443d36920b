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

#ifndef SEMALIGN_DATA_H_
#define SEMALIGN_DATA_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "semalign/core.h"

namespace semalign {

struct TripletDataset {
  std::vector<SentenceTriplet> triplets;
  std::string source;

  std::size_t size() const { return triplets.size(); }
};

struct NliParseResult {
  TripletDataset dataset;
  std::size_t skipped_rows = 0;  // rows with at least one empty field
};

// Reads a CSV with header columns sent0, sent1, hard_neg (any order, extra
// columns rejected). sent0 -> anchor, sent1 -> positive,
// hard_neg -> negative. Standard CSV quoting; UTF-8 passed through.
NliParseResult parse_nli_csv(const std::string& path);
NliParseResult parse_nli_csv_text(const std::string& text,
                                  const std::string& source = "<memory>");

void write_nli_csv(const TripletDataset& dataset, const std::string& path);

// Splits CSV text into records. Exposed for tests.
std::vector<std::vector<std::string>> parse_csv_records(
    const std::string& text);

struct PairBuildResult {
  std::vector<PreferencePair> pairs;
  std::size_t dropped = 0;  // triplets whose positive equals the negative
};

// Throws ConfigError unless tmpl is a paraphrase instruction.
PairBuildResult build_preference_pairs(const TripletDataset& dataset,
                                       const PromptTemplate& tmpl);

// Seeded shuffle, then the first n. Throws ArgumentError unless
// 0 < n <= |dataset|.
TripletDataset subsample(const TripletDataset& dataset, std::size_t n,
                         std::uint64_t seed);

// Line-delimited JSON, one {"prompt", "chosen", "rejected"} object per line.
void save_preference_pairs(const std::vector<PreferencePair>& pairs,
                           const std::string& path);
std::vector<PreferencePair> load_preference_pairs(const std::string& path);

// One sentence per line; blank lines are skipped.
std::vector<Sentence> load_sentences(const std::string& path);

std::string read_file(const std::string& path);

}  // namespace semalign

#endif  // SEMALIGN_DATA_H_
