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

// Checkpoint container:
//   8 bytes  magic "SACKPT01"
//   8 bytes  header length N, little-endian
//   N bytes  JSON header: config, vocabulary, mode, tensor directory
//   payload  float64 little-endian, tensors in directory order, row-major

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "semalign/error.h"
#include "semalign/tiny_transformer.h"

namespace semalign {

namespace {

constexpr char kMagic[8] = {'S', 'A', 'C', 'K', 'P', 'T', '0', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw FormatError("truncated checkpoint");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

nlohmann::ordered_json config_to_json(const TinyTransformerConfig& c) {
  nlohmann::ordered_json j;
  j["layers"] = c.layers;
  j["heads"] = c.heads;
  j["hidden_dim"] = c.hidden_dim;
  j["mlp_dim"] = c.mlp_dim;
  j["max_seq_len"] = c.max_seq_len;
  j["seed"] = c.seed;
  j["embedding_std"] = c.embedding_std;
  j["norm_eps"] = c.norm_eps;
  if (c.adapter) {
    j["adapter"] = {{"rank", c.adapter->rank}, {"alpha", c.adapter->alpha}};
  }
  return j;
}

TinyTransformerConfig config_from_json(const nlohmann::json& j) {
  TinyTransformerConfig c;
  c.layers = j.at("layers").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.mlp_dim = j.at("mlp_dim").get<std::size_t>();
  c.max_seq_len = j.at("max_seq_len").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.embedding_std = j.at("embedding_std").get<double>();
  c.norm_eps = j.at("norm_eps").get<double>();
  if (j.contains("adapter")) {
    c.adapter = AdapterConfig{j["adapter"].at("rank").get<std::size_t>(),
                              j["adapter"].at("alpha").get<double>()};
  }
  return c;
}

}  // namespace

void TinyTransformer::save(const std::string& path) const {
  nlohmann::ordered_json header;
  header["format"] = "semalign-checkpoint";
  header["version"] = 1;
  header["config"] = config_to_json(config_);
  header["mode"] = mode_ == ScorerMode::kFrozen ? "frozen" : "trainable";
  header["vocab"] = tokenizer_.user_pieces();
  auto& dir = header["tensors"] = nlohmann::ordered_json::array();
  auto& w = const_cast<TransformerWeights&>(weights_);
  for_each_tensor(w, [&](const std::string& name, Eigen::MatrixXd& m, bool) {
    dir.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  });
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof(kMagic));
  put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for_each_tensor(w, [&](const std::string&, Eigen::MatrixXd& m, bool) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        put_u64(out, std::bit_cast<std::uint64_t>(m(r, c)));
      }
    }
  });
  if (!out) throw IoError("write failed for '" + path + "'");
}

TinyTransformer TinyTransformer::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw FormatError("'" + path + "' is not a semalign checkpoint");
  }
  const std::uint64_t len = get_u64(in);
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) {
    throw FormatError("truncated checkpoint header in '" + path + "'");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad checkpoint header in '" + path + "': " + e.what());
  }

  TinyTransformer model(config_from_json(header.at("config")),
                        WordTokenizer(header.at("vocab")
                                          .get<std::vector<std::string>>()));
  const auto& dir = header.at("tensors");
  std::size_t i = 0;
  for_each_tensor(model.weights_, [&](const std::string& name,
                                      Eigen::MatrixXd& m, bool) {
    if (i >= dir.size() || dir[i].at("name").get<std::string>() != name ||
        dir[i].at("rows").get<Eigen::Index>() != m.rows() ||
        dir[i].at("cols").get<Eigen::Index>() != m.cols()) {
      throw FormatError("checkpoint tensor directory mismatch at '" + name +
                        "'");
    }
    ++i;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = std::bit_cast<double>(get_u64(in));
      }
    }
  });
  if (i != dir.size()) throw FormatError("checkpoint has extra tensors");
  if (header.value("mode", "trainable") == "frozen") {
    model.mode_ = ScorerMode::kFrozen;
  }
  return model;
}

}  // namespace semalign
