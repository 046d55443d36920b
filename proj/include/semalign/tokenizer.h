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

#ifndef SEMALIGN_TOKENIZER_H_
#define SEMALIGN_TOKENIZER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semalign {

using TokenId = std::int32_t;

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual std::size_t vocab_size() const = 0;
  virtual std::vector<TokenId> encode(std::string_view text) const = 0;
  virtual std::string decode(std::span<const TokenId> ids) const = 0;
  virtual const std::string& piece(TokenId id) const = 0;
  virtual TokenId bos_id() const = 0;
  virtual TokenId unk_id() const = 0;
};

// Word-level tokenizer over whitespace and punctuation.
//
// A piece is either a maximal run of word characters (ASCII alphanumerics,
// '_', and any byte >= 0x80) or a single punctuation character. A piece
// preceded by whitespace carries the marker "▁" as a prefix, so
// "a dog." encodes as [a] [▁dog] [.]. Pieces outside the vocabulary map to
// <unk>.
//
// Round trip: decode(encode(s)) == normalize(s) for in-vocabulary text,
// where normalize() collapses each whitespace run to one space and drops
// trailing whitespace.
class WordTokenizer final : public Tokenizer {
 public:
  static constexpr std::string_view kSpaceMarker = "\xE2\x96\x81";
  static constexpr TokenId kBos = 0;
  static constexpr TokenId kUnk = 1;

  // Vocabulary is <bos>, <unk>, then `pieces` in order (duplicates removed).
  explicit WordTokenizer(const std::vector<std::string>& pieces);

  // Builds a vocabulary from a corpus: pieces sorted by count descending,
  // then bytewise; at most max_vocab entries including the two specials.
  static WordTokenizer build(std::span<const std::string> corpus,
                             std::size_t max_vocab = 4096,
                             std::size_t min_count = 1);

  // Splits text into surface pieces without vocabulary lookup.
  static std::vector<std::string> split(std::string_view text);
  static std::string normalize(std::string_view text);

  std::size_t vocab_size() const override { return pieces_.size(); }
  std::vector<TokenId> encode(std::string_view text) const override;
  std::string decode(std::span<const TokenId> ids) const override;
  const std::string& piece(TokenId id) const override;
  TokenId bos_id() const override { return kBos; }
  TokenId unk_id() const override { return kUnk; }

  // Vocabulary without the special entries, in id order.
  std::vector<std::string> user_pieces() const;

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace semalign

#endif  // SEMALIGN_TOKENIZER_H_
