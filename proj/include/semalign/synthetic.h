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

#ifndef SEMALIGN_SYNTHETIC_H_
#define SEMALIGN_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "semalign/data.h"
#include "semalign/evaluation.h"

namespace semalign {

// A toy world of sentences built from three concept slots (agent, action,
// place). Each concept has several interchangeable surface words. An
// entailment keeps every concept and resamples surface words; a
// contradiction replaces one or two concepts.
struct SyntheticConfig {
  std::size_t triplets = 200;
  std::size_t sts_pairs = 40;
  std::uint64_t seed = 7;
};

struct SyntheticCorpus {
  TripletDataset nli;
  // Gold = number of shared concepts, 0 to 3.
  StsPairSet sts;
};

SyntheticCorpus make_synthetic(const SyntheticConfig& config);

}  // namespace semalign

#endif  // SEMALIGN_SYNTHETIC_H_
