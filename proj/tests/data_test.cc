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

#include "semalign/data.h"

#include <catch2/catch_amalgamated.hpp>
#include <fstream>
#include <set>

#include "semalign/error.h"
#include "testing.h"

using namespace semalign;

namespace {

TripletDataset numbered(std::size_t n) {
  TripletDataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = std::to_string(i);
    ds.triplets.push_back({Sentence("a" + s), Sentence("p" + s), Sentence("n" + s)});
  }
  return ds;
}

}  // namespace

// Expected records were produced by Python's csv.reader on the same text.
TEST_CASE("CSV records match a reference parser", "[data]") {
  const std::string text =
      "\xEF\xBB\xBFsent0,sent1,hard_neg\r\n"
      "\"A man, smiling.\",\"He is \"\"happy\"\".\",Nobody smiles.\r\n"
      "plain,\"multi\nline\",x\n"
      "  spaced  ,b,c\n";
  const std::vector<std::vector<std::string>> expected = {
      {"sent0", "sent1", "hard_neg"},
      {"A man, smiling.", "He is \"happy\".", "Nobody smiles."},
      {"plain", "multi\nline", "x"},
      {"  spaced  ", "b", "c"}};
  CHECK(parse_csv_records(text) == expected);
}

TEST_CASE("parse_nli_csv maps columns and skips empty fields", "[data]") {
  const auto r = parse_nli_csv_text(
      "hard_neg,sent0,sent1\nc,a,b\n\"n\",\"x, y\",p\nc2,a2,\n\n");
  REQUIRE(r.dataset.size() == 2);
  CHECK(r.dataset.triplets[0].anchor.text() == "a");
  CHECK(r.dataset.triplets[0].positive.text() == "b");
  CHECK(r.dataset.triplets[0].negative.text() == "c");
  CHECK(r.dataset.triplets[1].anchor.text() == "x, y");
  CHECK(r.skipped_rows == 1);
}

TEST_CASE("parse_nli_csv errors", "[data]") {
  CHECK_THROWS_AS(parse_nli_csv("/nonexistent/nli.csv"), IoError);
  CHECK_THROWS_AS(parse_nli_csv_text("a,b\n"), FormatError);
  CHECK_THROWS_AS(parse_nli_csv_text("sent0,sent1,other\n"), FormatError);
  try {
    parse_nli_csv_text("sent0,sent1,hard_neg\na,b,c\na,b\n");
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_nli_csv_text("sent0,sent1,hard_neg\n\"open,b,c\n"),
                  FormatError);
}

TEST_CASE("NLI CSV write then parse is identity", "[data]") {
  testing::TempDir dir("data-csv");
  TripletDataset ds;
  ds.triplets.push_back({Sentence("x, \"quoted\""), Sentence(" lead"),
                         Sentence("multi\nline")});
  ds.triplets.push_back({Sentence("plain"), Sentence("b"), Sentence("c\r")});
  write_nli_csv(ds, dir.file("d.csv"));
  const auto back = parse_nli_csv(dir.file("d.csv"));
  REQUIRE(back.dataset.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.dataset.triplets[i].anchor.text() == ds.triplets[i].anchor.text());
    CHECK(back.dataset.triplets[i].positive.text() == ds.triplets[i].positive.text());
    CHECK(back.dataset.triplets[i].negative.text() == ds.triplets[i].negative.text());
  }
}

TEST_CASE("build_preference_pairs", "[data]") {
  const auto& para = find_template(builtin_templates(), "paraphrase-1");
  auto ds = numbered(3);
  ds.triplets.push_back({Sentence("a"), Sentence("same"), Sentence("same")});
  const auto r = build_preference_pairs(ds, para);
  REQUIRE(r.pairs.size() == 3);
  CHECK(r.dropped == 1);
  CHECK(r.pairs.size() == ds.size() - r.dropped);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.pairs[i].prompt == fill_template(para, ds.triplets[i].anchor));
    CHECK(r.pairs[i].chosen == ds.triplets[i].positive.text());
    CHECK(r.pairs[i].rejected == ds.triplets[i].negative.text());
  }
  CHECK_THROWS_AS(build_preference_pairs(ds, find_template(builtin_templates(), "prompteol")),
                  ConfigError);
}

TEST_CASE("subsample is seeded prefix of a shuffle", "[data]") {
  const auto ds = numbered(100);
  auto texts = [](const TripletDataset& d) {
    std::vector<std::string> v;
    for (const auto& t : d.triplets) v.push_back(t.anchor.text());
    return v;
  };
  CHECK(texts(subsample(ds, 5, 7)) == texts(subsample(ds, 5, 7)));
  CHECK(texts(subsample(ds, 40, 1)) != texts(subsample(ds, 40, 2)));
  const auto all = texts(subsample(ds, 100, 3));
  const auto original = texts(ds);
  CHECK(std::set<std::string>(all.begin(), all.end()) ==
        std::set<std::string>(original.begin(), original.end()));
  CHECK_THROWS_AS(subsample(ds, 101, 1), ArgumentError);
  CHECK_THROWS_AS(subsample(ds, 0, 1), ArgumentError);
}

TEST_CASE("preference pair persistence", "[data]") {
  testing::TempDir dir("data-pairs");
  const std::vector<PreferencePair> pairs = {
      {"p \"1\"\n", "c\t1", "r1"}, {"p2", "c2 \xE2\x96\x81", "r2"}};
  save_preference_pairs(pairs, dir.file("p.jsonl"));
  CHECK(load_preference_pairs(dir.file("p.jsonl")) == pairs);
  std::ifstream in(dir.file("p.jsonl"));
  std::string first;
  std::getline(in, first);
  CHECK(first.rfind("{\"prompt\":", 0) == 0);

  std::ofstream(dir.file("bad.jsonl")) << "{\"prompt\":\"p\",\"chosen\":\"x\",\"rejected\":\"x\"}\n";
  CHECK_THROWS_AS(load_preference_pairs(dir.file("bad.jsonl")), FormatError);
}
