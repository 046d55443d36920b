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

#include "semalign/cli.h"

#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "semalign/embedder.h"
#include "testing.h"

using namespace semalign;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t line_count(const std::string& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST_CASE("usage handling", "[cli]") {
  const auto help = run({"--help"});
  CHECK(help.code == kExitOk);
  CHECK(help.out.find("eval-sts") != std::string::npos);
  CHECK(run({"embed", "--help"}).code == kExitOk);
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  const auto bad = run({"eval-space", "--emb", "x", "--bogus"});
  CHECK(bad.code == kExitUsage);
  CHECK(bad.err.find("Usage") != std::string::npos);
}

TEST_CASE("data errors use a single prefixed line", "[cli]") {
  testing::TempDir dir("cli-err");
  const auto r = run({"--run-dir", dir.path().string(), "eval-space", "--emb",
                      dir.file("missing.emb")});
  CHECK(r.code == kExitDataError);
  CHECK(r.err.rfind("error: io: ", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  const auto empty = run({"report", dir.path().string()});
  CHECK(empty.code == kExitDataError);
  CHECK(empty.err.rfind("error: format: ", 0) == 0);
}

TEST_CASE("report averages dataset columns", "[cli]") {
  std::vector<MetricRecord> records;
  const std::vector<double> values = {70, 80, 60, 90, 75, 65, 85};
  for (std::size_t i = 0; i < values.size(); ++i) {
    records.push_back({"sts_spearman", "sts-" + std::to_string(i), values[i], "m"});
  }
  const auto tables = build_report(records);
  REQUIRE(tables.size() == 1);
  CHECK(tables[0].datasets.size() + 1 == 8);
  CHECK(tables[0].average[0] == Catch::Approx(75.0));
  CHECK(report_json(tables)[0]["columns"].size() == 8);

  const auto two = build_report({{"m", "a", 70, "x"}, {"m", "b", 80, "x"}});
  CHECK(two[0].average[0] == 75.0);
  const auto one = build_report({{"m", "a", 42.5, ""}});
  CHECK(one[0].average[0] == 42.5);
  const auto replaced = build_report({{"m", "a", 1, "x"}, {"m", "a", 3, "x"}});
  CHECK(replaced[0].average[0] == 3.0);
}

TEST_CASE("pipeline smoke run", "[cli]") {
  testing::TempDir dir("cli-run");
  const std::string run_dir = dir.file("run");
  ::setenv("SEMALIGN_OUTPUT_DIR", run_dir.c_str(), 1);
  ::setenv("SEMALIGN_LOG_LEVEL", "error", 1);
  const auto data = dir.file("data");
  REQUIRE(run({"make-synthetic", "--out-dir", data, "--triplets", "24", "--sts-pairs", "8"})
              .code == kExitOk);
  const auto nli = data + "/synthetic-nli.csv";
  const auto sts = data + "/synthetic-sts.tsv";
  REQUIRE(run({"build-pairs", "--nli", nli, "--template", "paraphrase-1", "--n", "20",
               "--seed", "3", "--out", dir.file("pairs.jsonl")})
              .code == kExitOk);
  std::ofstream(dir.file("tiny.json"))
      << R"({"layers": 1, "heads": 2, "hidden_dim": 16, "epochs": 1, "per_step_batch": 4,
             "grad_accum_steps": 2, "max_seq_len": 64})";
  const auto train = run({"train", "--pairs", dir.file("pairs.jsonl"), "--config",
                          dir.file("tiny.json"), "--out-dir", dir.file("model"),
                          "--epochs", "2", "--seed", "4", "--vocab", sts});
  REQUIRE(train.code == kExitOk);
  CHECK(train.out.find("steps\t10") != std::string::npos);
  {
    std::ofstream sentences(dir.file("s.txt"));
    sentences << "A dog runs in the park.\nThe cat sleeps at the house.\nA man eats.\n";
  }
  const auto model = dir.file("model") + "/model.ckpt";
  REQUIRE(run({"embed", "--model", model, "--in", dir.file("s.txt"), "--out",
               dir.file("s.emb"), "--threads", "2"})
              .code == kExitOk);
  CHECK(load_embeddings(dir.file("s.emb")).n() == 3);
  const auto eval = run({"eval-sts", "--model", model, "--data", sts, "--label", "after"});
  REQUIRE(eval.code == kExitOk);
  CHECK(eval.out.rfind("synthetic-sts\t", 0) == 0);
  REQUIRE(run({"eval-space", "--emb", dir.file("s.emb")}).code == kExitOk);
  REQUIRE(run({"eval-gar", "--model", model, "--in", dir.file("s.txt"), "--k", "5",
               "--report", dir.file("gar.json")})
              .code == kExitOk);
  REQUIRE(run({"plot-pca", "--emb", dir.file("s.emb"), "--out", dir.file("pca.tsv"),
               "--image", dir.file("pca.ppm")})
              .code == kExitOk);
  CHECK(line_count(dir.file("pca.tsv")) == 4);
  const auto report = run({"report"});
  REQUIRE(report.code == kExitOk);
  CHECK(report.out.find("Avg.") != std::string::npos);
  CHECK(line_count(run_dir + "/manifest.jsonl") == 9);
  CHECK(line_count(run_dir + "/metrics.jsonl") == 4);

  // Identical invocations reproduce identical outputs.
  REQUIRE(run({"train", "--pairs", dir.file("pairs.jsonl"), "--config",
               dir.file("tiny.json"), "--out-dir", dir.file("model2"), "--epochs", "2",
               "--seed", "4", "--vocab", sts})
              .code == kExitOk);
  CHECK(sha256_file(dir.file("model2") + "/model.ckpt") == sha256_file(model));
  CHECK(run({"train", "--pairs", dir.file("pairs.jsonl"), "--out-dir", dir.file("m3"),
             "--config", dir.file("tiny.json"), "--beta", "-1"})
            .code == kExitDataError);
  ::unsetenv("SEMALIGN_OUTPUT_DIR");
  ::unsetenv("SEMALIGN_LOG_LEVEL");
}
