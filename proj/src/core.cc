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

#include "semalign/core.h"

#include <charconv>
#include <fstream>

#include "semalign/error.h"

namespace semalign {

std::string_view trim(std::string_view s) {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(kSpace);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(kSpace);
  return s.substr(b, e - b + 1);
}

Sentence::Sentence(std::string text, std::optional<std::string> id)
    : text_(std::move(text)), id_(std::move(id)) {
  if (trim(text_).empty()) {
    throw ArgumentError("sentence text is empty");
  }
}

std::string_view to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::kEmbeddingExtraction:
      return "embedding_extraction";
    case TemplateKind::kParaphraseInstruction:
      return "paraphrase_instruction";
  }
  return "unknown";
}

TemplateKind template_kind_from_string(std::string_view name) {
  if (name == "embedding_extraction") return TemplateKind::kEmbeddingExtraction;
  if (name == "paraphrase_instruction") {
    return TemplateKind::kParaphraseInstruction;
  }
  throw ConfigError("unknown template kind '" + std::string(name) + "'");
}

namespace {

std::size_t count_occurrences(std::string_view haystack,
                              std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

}  // namespace

PromptTemplate::PromptTemplate(std::string name, TemplateKind kind,
                               std::string pattern)
    : name_(std::move(name)), kind_(kind), pattern_(std::move(pattern)) {
  const auto n = count_occurrences(pattern_, kPlaceholder);
  if (n != 1) {
    throw ConfigError("template '" + name_ + "' must contain the placeholder " +
                      std::string(kPlaceholder) + " exactly once (found " +
                      std::to_string(n) + ")");
  }
}

std::string fill_template(const PromptTemplate& tmpl, std::string_view text) {
  const std::string& p = tmpl.pattern();
  const auto pos = p.find(PromptTemplate::kPlaceholder);
  std::string out;
  out.reserve(p.size() + text.size());
  out.append(p, 0, pos);
  out.append(text);
  out.append(p, pos + PromptTemplate::kPlaceholder.size());
  return out;
}

std::string fill_template(const PromptTemplate& tmpl,
                          const Sentence& sentence) {
  return fill_template(tmpl, std::string_view(sentence.text()));
}

const std::vector<PromptTemplate>& builtin_templates() {
  using K = TemplateKind;
  static const std::vector<PromptTemplate> kTemplates = {
      {"paraphrase-1", K::kParaphraseInstruction,
       "Keep the same meaning of this sentence: \"{sentence}\", while making "
       "some changes."},
      {"paraphrase-2", K::kParaphraseInstruction,
       "Generate a paraphrase of this sentence: \"{sentence}\" that preserves "
       "its meaning, while making some changes."},
      {"paraphrase-3", K::kParaphraseInstruction,
       "Rewrite the sentence: \"{sentence}\" while preserving its main "
       "meaning, but the wording may be simplified or rephrased."},
      {"paraphrase-4", K::kParaphraseInstruction,
       "Keep the main meaning of this sentence: \"{sentence}\", and rewrite "
       "it in a different way."},
      {"paraphrase-5", K::kParaphraseInstruction,
       "Generate a paraphrase of the sentence: \"{sentence}\"."},
      // The trailing open quote is part of the prompt.
      {"prompteol", K::kEmbeddingExtraction,
       "This sentence: \"{sentence}\" means in one word:\""},
      {"pretended-cot", K::kEmbeddingExtraction,
       "After thinking step by step, this sentence: \"{sentence}\" means in "
       "one word:\""},
  };
  return kTemplates;
}

const PromptTemplate& find_template(const std::vector<PromptTemplate>& registry,
                                    std::string_view name_or_index) {
  for (const auto& t : registry) {
    if (t.name() == name_or_index) return t;
  }
  std::size_t index = 0;
  const char* end = name_or_index.data() + name_or_index.size();
  auto [ptr, ec] = std::from_chars(name_or_index.data(), end, index);
  if (ec == std::errc() && ptr == end && index < registry.size()) {
    return registry[index];
  }
  throw ConfigError("unknown template '" + std::string(name_or_index) + "'");
}

void save_template_registry(const std::string& path,
                            const std::vector<PromptTemplate>& templates) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& t : templates) {
    for (const std::string* field : {&t.name(), &t.pattern()}) {
      if (field->find_first_of("\t\n\r") != std::string::npos) {
        throw ConfigError("template '" + t.name() +
                          "' contains a tab or newline");
      }
    }
    out << t.name() << '\t' << to_string(t.kind()) << '\t' << t.pattern()
        << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<PromptTemplate> load_template_registry(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<PromptTemplate> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": expected name<TAB>kind<TAB>pattern");
    }
    out.emplace_back(line.substr(0, t1),
                     template_kind_from_string(
                         std::string_view(line).substr(t1 + 1, t2 - t1 - 1)),
                     line.substr(t2 + 1));
  }
  return out;
}

}  // namespace semalign
