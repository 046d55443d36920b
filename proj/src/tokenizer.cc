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

#include "semalign/tokenizer.h"

#include <algorithm>
#include <map>

#include "semalign/error.h"

namespace semalign {

namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_word(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}

}  // namespace

WordTokenizer::WordTokenizer(const std::vector<std::string>& pieces) {
  pieces_ = {"<bos>", "<unk>"};
  for (const auto& p : pieces) {
    if (p.empty()) throw ArgumentError("empty vocabulary piece");
    if (index_.contains(p) || p == "<bos>" || p == "<unk>") continue;
    index_.emplace(p, static_cast<TokenId>(pieces_.size()));
    pieces_.push_back(p);
  }
  index_.emplace("<bos>", kBos);
  index_.emplace("<unk>", kUnk);
}

std::vector<std::string> WordTokenizer::split(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    bool spaced = false;
    while (i < text.size() && is_space(text[i])) {
      spaced = true;
      ++i;
    }
    if (i == text.size()) break;
    std::size_t j = i + 1;
    if (is_word(text[i])) {
      while (j < text.size() && is_word(text[j])) ++j;
    }
    std::string piece = spaced ? std::string(kSpaceMarker) : std::string();
    piece.append(text.substr(i, j - i));
    out.push_back(std::move(piece));
    i = j;
  }
  return out;
}

std::string WordTokenizer::normalize(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : text) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

WordTokenizer WordTokenizer::build(std::span<const std::string> corpus,
                                   std::size_t max_vocab,
                                   std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& text : corpus) {
    for (auto& p : split(text)) ++counts[std::move(p)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  std::vector<std::string> pieces;
  for (auto& [piece, count] : ranked) {
    if (count < min_count || pieces.size() + 2 >= max_vocab) break;
    pieces.push_back(piece);
  }
  return WordTokenizer(pieces);
}

std::vector<TokenId> WordTokenizer::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const auto& p : split(text)) {
    const auto it = index_.find(p);
    ids.push_back(it == index_.end() ? kUnk : it->second);
  }
  return ids;
}

std::string WordTokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    const std::string& p = piece(id);
    if (p.starts_with(kSpaceMarker)) {
      out.push_back(' ');
      out.append(p, kSpaceMarker.size());
    } else {
      out.append(p);
    }
  }
  return out;
}

const std::string& WordTokenizer::piece(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size()) {
    throw ArgumentError("token id " + std::to_string(id) + " out of range");
  }
  return pieces_[id];
}

std::vector<std::string> WordTokenizer::user_pieces() const {
  return {pieces_.begin() + 2, pieces_.end()};
}

}  // namespace semalign
