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

#include <catch2/catch_amalgamated.hpp>
#include <fstream>

#include "semalign/embedder.h"
#include "semalign/error.h"
#include "testing.h"

using namespace semalign;

namespace {

StsPairSet toy_sts() {
  StsPairSet set;
  set.name = "toy";
  set.records = {{"a dog runs .", "A puppy sprints .", 0},
                 {"the cat sleeps at home .", "a man eats .", 0},
                 {"a man eats in the kitchen .", "the man eats .", 0},
                 {"the dog sleeps .", "the cat sleeps .", 0},
                 {"a dog runs in the park .", "the cat sleeps at home .", 0}};
  return set;
}

}  // namespace

TEST_CASE("eval_sts on constructed gold scores", "[evaluation]") {
  const auto m = testing::toy_model();
  const auto& eol = find_template(builtin_templates(), "prompteol");
  auto set = toy_sts();
  for (std::size_t i = 0; i < set.records.size(); ++i) set.records[i].gold = double(i);
  const auto probe = eval_sts(m, eol, set);
  REQUIRE(probe.cosines.size() == set.records.size());
  for (std::size_t i = 0; i < set.records.size(); ++i) set.records[i].gold = probe.cosines[i];
  CHECK(eval_sts(m, eol, set).spearman_x100 == Catch::Approx(100.0));
  for (auto& r : set.records) r.gold = -r.gold;
  CHECK(eval_sts(m, eol, set).spearman_x100 == Catch::Approx(-100.0));
  set.records.resize(1);
  CHECK_THROWS_AS(eval_sts(m, eol, set), FormatError);
}

TEST_CASE("STS TSV loading", "[evaluation]") {
  testing::TempDir dir("sts");
  const auto path = dir.file("dev-set.tsv");
  std::ofstream(path) << "a b\tc d\t4.5\r\n\ne\tf\t0\n";
  const auto set = load_sts_tsv(path);
  CHECK(set.name == "dev-set");
  REQUIRE(set.records.size() == 2);
  CHECK(set.records[0].sentence2 == "c d");
  CHECK(set.records[0].gold == 4.5);
  save_sts_tsv(set, dir.file("copy.tsv"));
  CHECK(load_sts_tsv(dir.file("copy.tsv")).records.size() == 2);
  std::ofstream(dir.file("bad.tsv")) << "a\tb\tnan\ne\tf\t1\n";
  CHECK_THROWS_AS(load_sts_tsv(dir.file("bad.tsv")), FormatError);
  std::ofstream(dir.file("cols.tsv")) << "a\tb\n";
  CHECK_THROWS_AS(load_sts_tsv(dir.file("cols.tsv")), FormatError);
  std::ofstream(dir.file("text.tsv")) << "a\tb\thigh\nc\td\t1\n";
  CHECK_THROWS_AS(load_sts_tsv(dir.file("text.tsv")), FormatError);
}

TEST_CASE("aligned token report", "[evaluation]") {
  auto m = testing::toy_model();
  const auto& eol = find_template(builtin_templates(), "prompteol");
  const std::vector<Sentence> s = {Sentence("a dog")};
  const auto full = aligned_token_report(m, eol, s, m.vocab_size());
  CHECK(full.gar == 1.0);
  CHECK(full.sentences[0].top_tokens.size() == m.vocab_size());
  CHECK(full.sentences[0].surface == std::set<std::string>{"a", "\u2581dog"});
  CHECK_THROWS_AS(aligned_token_report(m, eol, s, m.vocab_size() + 1), ArgumentError);

  const Eigen::VectorXd e = embed(m, eol, s[0]).vector;
  const auto ids = m.tokenizer().encode("a dog");
  REQUIRE(ids.size() == 2);
  REQUIRE(ids[1] != m.tokenizer().unk_id());
  m.weights().unembedding.setZero();
  m.weights().unembedding.row(ids[1]) = e.transpose();
  const auto one = aligned_token_report(m, eol, s, 1);
  CHECK(one.sentences[0].top_tokens.front().id == ids[1]);
  CHECK(one.sentences[0].hits == std::set<std::string>{"\u2581dog"});
  CHECK(one.gar == 0.5);
  m.weights().unembedding.row(ids[0]) = e.transpose();
  CHECK(aligned_token_report(m, eol, s, 2).gar == 1.0);

  m.weights().unembedding.setZero();
  m.weights().unembedding.row(m.tokenizer().encode(" cat").front()) = e.transpose();
  CHECK(aligned_token_report(m, eol, s, 1).gar == 0.0);
}

TEST_CASE("metric records round trip", "[evaluation]") {
  testing::TempDir dir("records");
  const std::vector<MetricRecord> a = {{"sts_spearman", "sts-b", 71.25, "base"},
                                       {"uniformity", "wiki", -2.5, ""}};
  append_metric_records(a, dir.file("m.jsonl"));
  append_metric_records({a[0]}, dir.file("m.jsonl"));
  const auto back = load_metric_records(dir.file("m.jsonl"));
  REQUIRE(back.size() == 3);
  CHECK(back[0] == a[0]);
  CHECK(back[1] == a[1]);
  CHECK(metric_record_line(a[1]) == R"({"metric":"uniformity","dataset":"wiki","value":-2.5})");
  std::ofstream(dir.file("bad.jsonl")) << "{\"metric\":1}\n";
  CHECK_THROWS_AS(load_metric_records(dir.file("bad.jsonl")), FormatError);
}
