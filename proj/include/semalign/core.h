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

#ifndef SEMALIGN_CORE_H_
#define SEMALIGN_CORE_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace semalign {

// A raw input sentence. Text is stored verbatim; no normalization.
class Sentence {
 public:
  // Throws ArgumentError if text is empty after trimming whitespace.
  explicit Sentence(std::string text, std::optional<std::string> id = {});

  const std::string& text() const { return text_; }
  const std::optional<std::string>& id() const { return id_; }

  bool operator==(const Sentence&) const = default;

 private:
  std::string text_;
  std::optional<std::string> id_;
};

// NLI triplet: premise (anchor), entailment (positive), contradiction
// (negative).
struct SentenceTriplet {
  Sentence anchor;
  Sentence positive;
  Sentence negative;

  bool operator==(const SentenceTriplet&) const = default;
};

enum class TemplateKind { kEmbeddingExtraction, kParaphraseInstruction };

std::string_view to_string(TemplateKind kind);
// Throws ConfigError on unknown names.
TemplateKind template_kind_from_string(std::string_view name);

// Prompt pattern with exactly one placeholder marker.
class PromptTemplate {
 public:
  static constexpr std::string_view kPlaceholder = "{sentence}";

  // Throws ConfigError unless the placeholder occurs exactly once.
  PromptTemplate(std::string name, TemplateKind kind, std::string pattern);

  const std::string& name() const { return name_; }
  TemplateKind kind() const { return kind_; }
  const std::string& pattern() const { return pattern_; }

  bool operator==(const PromptTemplate&) const = default;

 private:
  std::string name_;
  TemplateKind kind_;
  std::string pattern_;
};

// (x, y_w, y_l): the templated paraphrase instruction, the preferred
// response and the rejected response.
struct PreferencePair {
  std::string prompt;
  std::string chosen;
  std::string rejected;

  bool operator==(const PreferencePair&) const = default;
};

// Substitutes the sentence text for the placeholder. Pure.
std::string fill_template(const PromptTemplate& tmpl, const Sentence& sentence);
std::string fill_template(const PromptTemplate& tmpl, std::string_view text);

// Five paraphrase instructions followed by the two extraction templates
// ("prompteol", "pretended-cot").
const std::vector<PromptTemplate>& builtin_templates();

// Looks up a template by name, or by a decimal index into `registry`.
// Throws ConfigError when nothing matches.
const PromptTemplate& find_template(const std::vector<PromptTemplate>& registry,
                                    std::string_view name_or_index);

// Plain-text registry: one record per line, "name<TAB>kind<TAB>pattern".
// Blank lines and lines starting with '#' are ignored on read.
void save_template_registry(const std::string& path,
                            const std::vector<PromptTemplate>& templates);
std::vector<PromptTemplate> load_template_registry(const std::string& path);

// Whitespace trim used by the non-empty invariants.
std::string_view trim(std::string_view s);

}  // namespace semalign

#endif  // SEMALIGN_CORE_H_
