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

#include "semalign/synthetic.h"

#include <array>

#include "semalign/error.h"
#include "semalign/rng.h"

namespace semalign {
namespace {

using Synonyms = std::vector<std::string>;

const std::vector<Synonyms>& agents() {
  static const std::vector<Synonyms> v = {
      {"dog", "puppy", "hound"},    {"man", "guy", "gentleman"},
      {"woman", "lady", "madam"},   {"child", "kid", "youngster"},
      {"cat", "kitten", "feline"},  {"bird", "sparrow", "songbird"},
  };
  return v;
}

const std::vector<Synonyms>& actions() {
  static const std::vector<Synonyms> v = {
      {"runs", "sprints", "jogs"},     {"sleeps", "naps", "dozes"},
      {"eats", "dines", "feeds"},      {"sings", "chants", "hums"},
      {"plays", "frolics", "romps"},   {"waits", "lingers", "stays"},
  };
  return v;
}

const std::vector<Synonyms>& places() {
  static const std::vector<Synonyms> v = {
      {"park", "garden", "lawn"},     {"street", "road", "avenue"},
      {"beach", "shore", "coast"},    {"house", "home", "cottage"},
      {"forest", "woods", "grove"},   {"kitchen", "pantry", "scullery"},
  };
  return v;
}

const std::array<const char*, 2> kDeterminers = {"A", "The"};
const std::array<const char*, 3> kPrepositions = {"in", "at", "near"};

struct Concepts {
  std::size_t agent, action, place;
};

struct Surface {
  std::size_t agent, action, place, det, prep;
};

std::string render(const Concepts& c, const Surface& s) {
  return std::string(kDeterminers[s.det]) + " " + agents()[c.agent][s.agent] +
         " " + actions()[c.action][s.action] + " " + kPrepositions[s.prep] +
         " the " + places()[c.place][s.place] + ".";
}

Concepts random_concepts(Rng& rng) {
  return {rng.below(agents().size()), rng.below(actions().size()),
          rng.below(places().size())};
}

Surface random_surface(Rng& rng) {
  return {rng.below(3), rng.below(3), rng.below(3),
          rng.below(kDeterminers.size()), rng.below(kPrepositions.size())};
}

std::size_t other(Rng& rng, std::size_t current, std::size_t n) {
  return (current + 1 + rng.below(n - 1)) % n;
}

// Replaces `count` distinct concept slots with different concepts.
Concepts perturb(Rng& rng, Concepts c, std::size_t count) {
  std::vector<std::size_t> slots = {0, 1, 2};
  rng.shuffle(slots);
  for (std::size_t i = 0; i < count; ++i) {
    switch (slots[i]) {
      case 0: c.agent = other(rng, c.agent, agents().size()); break;
      case 1: c.action = other(rng, c.action, actions().size()); break;
      default: c.place = other(rng, c.place, places().size()); break;
    }
  }
  return c;
}

// Resamples surface words until at least one content word changes.
Surface reword(Rng& rng, const Surface& s) {
  Surface t;
  do {
    t = random_surface(rng);
  } while (t.agent == s.agent && t.action == s.action && t.place == s.place);
  return t;
}

}  // namespace

SyntheticCorpus make_synthetic(const SyntheticConfig& config) {
  if (config.sts_pairs != 0 && config.sts_pairs < 2) {
    throw ArgumentError("synthetic STS set needs at least 2 pairs");
  }
  Rng rng(config.seed);
  SyntheticCorpus out;
  out.nli.source = "synthetic-nli";
  for (std::size_t i = 0; i < config.triplets; ++i) {
    const Concepts c = random_concepts(rng);
    const Surface s = random_surface(rng);
    const Concepts neg = perturb(rng, c, 1 + rng.below(2));
    out.nli.triplets.push_back({Sentence(render(c, s)),
                                Sentence(render(c, reword(rng, s))),
                                Sentence(render(neg, random_surface(rng)))});
  }
  out.sts.name = "synthetic-sts";
  for (std::size_t i = 0; i < config.sts_pairs; ++i) {
    // Cycle the number of shared concepts so every gold level is present.
    const std::size_t shared = 3 - i % 4;
    const Concepts a = random_concepts(rng);
    const Surface sa = random_surface(rng);
    const Concepts b = perturb(rng, a, 3 - shared);
    const Surface sb = shared == 3 ? reword(rng, sa) : random_surface(rng);
    out.sts.records.push_back(
        {render(a, sa), render(b, sb), static_cast<double>(shared)});
  }
  return out;
}

}  // namespace semalign
