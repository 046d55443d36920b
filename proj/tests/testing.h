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

#ifndef SEMALIGN_TESTS_TESTING_H_
#define SEMALIGN_TESTS_TESTING_H_

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "semalign/tiny_transformer.h"
#include "semalign/tokenizer.h"

namespace semalign::testing {

inline std::vector<std::string> toy_corpus() {
  return {"a dog runs in the park .", "the cat sleeps at home .",
          "A puppy sprints near the garden .", "a man eats in the kitchen .",
          "This sentence : \"{sentence}\" means in one word :\""};
}

inline TinyTransformerConfig toy_config(std::uint64_t seed = 1) {
  TinyTransformerConfig c;
  c.layers = 2;
  c.heads = 2;
  c.hidden_dim = 16;
  c.max_seq_len = 32;
  c.seed = seed;
  return c;
}

inline TinyTransformer toy_model(std::uint64_t seed = 1) {
  const auto corpus = toy_corpus();
  return TinyTransformer(toy_config(seed), WordTokenizer::build(corpus));
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("semalign-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace semalign::testing

#endif  // SEMALIGN_TESTS_TESTING_H_
