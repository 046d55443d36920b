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

#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "semalign/error.h"
#include "semalign/rng.h"

namespace semalign {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> parse_csv_records(
    const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  std::size_t i = 0;
  // Skip a UTF-8 byte order mark.
  if (text.starts_with("\xEF\xBB\xBF")) i = 3;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started && field.empty()) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) {
    throw FormatError("unterminated quoted field at line " +
                      std::to_string(line));
  }
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

NliParseResult parse_nli_csv_text(const std::string& text,
                                  const std::string& source) {
  auto records = parse_csv_records(text);
  if (records.empty()) throw FormatError(source + ": missing header");
  const auto& header = records.front();
  if (header.size() != 3) {
    throw FormatError(source + ": row 1: expected 3 header columns, got " +
                      std::to_string(header.size()));
  }
  int col_anchor = -1, col_pos = -1, col_neg = -1;
  for (int c = 0; c < 3; ++c) {
    const auto name = trim(header[c]);
    if (name == "sent0") col_anchor = c;
    if (name == "sent1") col_pos = c;
    if (name == "hard_neg") col_neg = c;
  }
  if (col_anchor < 0 || col_pos < 0 || col_neg < 0) {
    throw FormatError(source + ": header must name sent0, sent1, hard_neg");
  }

  NliParseResult result;
  result.dataset.source = source;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& row = records[r];
    if (row.size() == 1 && row[0].empty()) continue;  // blank line
    if (row.size() != 3) {
      throw FormatError(source + ": row " + std::to_string(r + 1) +
                        ": expected 3 columns, got " +
                        std::to_string(row.size()));
    }
    if (trim(row[col_anchor]).empty() || trim(row[col_pos]).empty() ||
        trim(row[col_neg]).empty()) {
      ++result.skipped_rows;
      continue;
    }
    result.dataset.triplets.push_back({Sentence(row[col_anchor]),
                                       Sentence(row[col_pos]),
                                       Sentence(row[col_neg])});
  }
  return result;
}

NliParseResult parse_nli_csv(const std::string& path) {
  return parse_nli_csv_text(read_file(path), path);
}

namespace {

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos &&
      !s.starts_with(' ') && !s.ends_with(' ')) {
    return s;
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

void write_nli_csv(const TripletDataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "sent0,sent1,hard_neg\n";
  for (const auto& t : dataset.triplets) {
    out << csv_quote(t.anchor.text()) << ',' << csv_quote(t.positive.text())
        << ',' << csv_quote(t.negative.text()) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

PairBuildResult build_preference_pairs(const TripletDataset& dataset,
                                       const PromptTemplate& tmpl) {
  if (tmpl.kind() != TemplateKind::kParaphraseInstruction) {
    throw ConfigError("template '" + tmpl.name() +
                      "' is not a paraphrase instruction");
  }
  PairBuildResult result;
  result.pairs.reserve(dataset.size());
  for (const auto& t : dataset.triplets) {
    if (t.positive.text() == t.negative.text()) {
      ++result.dropped;
      continue;
    }
    result.pairs.push_back(
        {fill_template(tmpl, t.anchor), t.positive.text(), t.negative.text()});
  }
  return result;
}

TripletDataset subsample(const TripletDataset& dataset, std::size_t n,
                         std::uint64_t seed) {
  if (n == 0 || n > dataset.size()) {
    throw ArgumentError("subsample size " + std::to_string(n) +
                        " outside [1, " + std::to_string(dataset.size()) + "]");
  }
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  TripletDataset out;
  out.source = dataset.source;
  out.triplets.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.triplets.push_back(dataset.triplets[order[i]]);
  }
  return out;
}

void save_preference_pairs(const std::vector<PreferencePair>& pairs,
                           const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& p : pairs) {
    nlohmann::ordered_json j;
    j["prompt"] = p.prompt;
    j["chosen"] = p.chosen;
    j["rejected"] = p.rejected;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<PreferencePair> load_preference_pairs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<PreferencePair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    try {
      const auto j = nlohmann::json::parse(line);
      PreferencePair p{j.at("prompt").get<std::string>(),
                       j.at("chosen").get<std::string>(),
                       j.at("rejected").get<std::string>()};
      if (p.chosen == p.rejected) {
        throw FormatError(where + ": chosen equals rejected");
      }
      pairs.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
  return pairs;
}

std::vector<Sentence> load_sentences(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<Sentence> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    out.emplace_back(line);
  }
  return out;
}

}  // namespace semalign
