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

#include <catch2/catch_amalgamated.hpp>

#include "semalign/error.h"
#include "testing.h"

using namespace semalign;

namespace {

std::vector<Sentence> sentences() {
  return {Sentence("a dog runs ."), Sentence("the cat sleeps at home ."),
          Sentence("a man eats ."), Sentence("A puppy sprints near the garden ."),
          Sentence("the dog sleeps .")};
}

}  // namespace

TEST_CASE("embed uses the last template token", "[embedder]") {
  const auto m = testing::toy_model();
  const auto& eol = find_template(builtin_templates(), "prompteol");
  const Sentence s("a dog runs .");
  const auto e = embed(m, eol, s, {Pooling::kLastToken, "toy"});
  CHECK(e.vector == m.last_token_hidden(fill_template(eol, s)));
  CHECK(e.model_tag == "toy");
  CHECK(e.template_tag == "prompteol");
  const auto mean = embed(m, eol, s, {Pooling::kMean, "toy"});
  CHECK(mean.vector == m.mean_hidden(fill_template(eol, s)));
  CHECK_THROWS_AS(embed(m, builtin_templates().front(), s), ConfigError);
}

TEST_CASE("corpus embedding is independent of threading", "[embedder]") {
  const auto m = testing::toy_model();
  const auto& eol = find_template(builtin_templates(), "prompteol");
  const auto s = sentences();
  const auto serial = embed_corpus(m, eol, s, {Pooling::kLastToken, "", 1});
  const auto parallel = embed_corpus(m, eol, s, {Pooling::kLastToken, "", 3});
  CHECK(serial.rows == parallel.rows);
  REQUIRE(serial.n() == s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(serial.row(i).vector == embed(m, eol, s[i]).vector);
  }
  const auto some = embed_corpus(m, eol, std::span(s).subspan(1, 2));
  CHECK(some.rows.row(0) == serial.rows.row(1));
}

TEST_CASE("corpus errors name the sentence", "[embedder]") {
  const auto m = testing::toy_model();
  const auto& eol = find_template(builtin_templates(), "prompteol");
  std::string longer;
  for (int i = 0; i < 40; ++i) longer += "dog ";
  std::vector<Sentence> s = {Sentence("a dog"), Sentence(longer), Sentence(longer)};
  try {
    embed_corpus(m, eol, s, {Pooling::kLastToken, "", 2});
    FAIL("expected a length error");
  } catch (const Error& e) {
    CHECK(e.kind() == "length");
    CHECK(std::string(e.what()).find("sentence 1") != std::string::npos);
  }
}

TEST_CASE("embedding file round trip is bit-exact", "[embedder]") {
  testing::TempDir dir("emb");
  const auto m = testing::toy_model();
  const auto& eol = find_template(builtin_templates(), "prompteol");
  auto e = embed_corpus(m, eol, sentences(), {Pooling::kLastToken, "tiny"});
  save_embeddings(e, dir.file("e.emb"));
  const auto back = load_embeddings(dir.file("e.emb"));
  CHECK(back.rows == e.rows);
  CHECK(back.model_tag == "tiny");
  CHECK(back.template_tag == "prompteol");
  CHECK_THROWS_AS(load_embeddings(dir.file("none.emb")), IoError);
}

TEST_CASE("cosine similarity", "[embedder]") {
  SentenceEmbedding a{Eigen::Vector2d(1, 0), "", ""};
  SentenceEmbedding b{Eigen::Vector2d(1, 1), "", ""};
  CHECK(cosine_similarity(a, b) == Catch::Approx(std::sqrt(0.5)));
  SentenceEmbedding z{Eigen::Vector2d::Zero(), "", ""};
  CHECK_THROWS_AS(cosine_similarity(a, z), NumericError);
}
