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

#include "semalign/tiny_transformer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "semalign/error.h"
#include "semalign/rng.h"

namespace semalign {

using Eigen::ArrayXXd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void TinyTransformerConfig::validate() const {
  if (layers == 0 || heads == 0 || hidden_dim == 0 || max_seq_len < 2) {
    throw ConfigError("transformer sizes must be positive");
  }
  if (hidden_dim % heads != 0) {
    throw ConfigError("hidden_dim " + std::to_string(hidden_dim) +
                      " is not divisible by heads " + std::to_string(heads));
  }
  if (adapter && (adapter->rank == 0 || !(adapter->alpha > 0.0))) {
    throw ConfigError("adapter rank and alpha must be positive");
  }
}

void for_each_tensor(
    TransformerWeights& w,
    const std::function<void(const std::string&, MatrixXd&, bool)>& f) {
  auto visit = [&](const std::string& name, MatrixXd& m, bool adapter) {
    if (m.size() != 0) f(name, m, adapter);
  };
  auto visit_linear = [&](const std::string& prefix, LinearWeights& l) {
    visit(prefix + ".w", l.w, false);
    visit(prefix + ".b", l.b, false);
    visit(prefix + ".lora_a", l.lora_a, true);
    visit(prefix + ".lora_b", l.lora_b, true);
  };
  visit("token_embedding", w.token_embedding, false);
  visit("position_embedding", w.position_embedding, false);
  for (std::size_t i = 0; i < w.blocks.size(); ++i) {
    auto& b = w.blocks[i];
    const std::string p = "blocks." + std::to_string(i) + ".";
    visit(p + "attn_norm", b.attn_norm, false);
    visit_linear(p + "q", b.q);
    visit_linear(p + "k", b.k);
    visit_linear(p + "v", b.v);
    visit_linear(p + "o", b.o);
    visit(p + "mlp_norm", b.mlp_norm, false);
    visit_linear(p + "fc1", b.fc1);
    visit_linear(p + "fc2", b.fc2);
  }
  visit("final_norm", w.final_norm, false);
  visit("unembedding", w.unembedding, false);
}

namespace {

constexpr double kSqrt2OverPi = 0.79788456080286535588;
constexpr double kGeluCubic = 0.044715;

LinearWeights make_linear(std::size_t out, std::size_t in, bool bias,
                          const std::optional<AdapterConfig>& adapter) {
  LinearWeights l;
  l.w = MatrixXd::Zero(out, in);
  if (bias) l.b = MatrixXd::Zero(out, 1);
  if (adapter) {
    l.lora_a = MatrixXd::Zero(adapter->rank, in);
    l.lora_b = MatrixXd::Zero(out, adapter->rank);
  }
  return l;
}

TransformerWeights make_shapes(const TinyTransformerConfig& c,
                               std::size_t vocab) {
  const std::size_t d = c.hidden_dim;
  const std::size_t m = c.effective_mlp_dim();
  TransformerWeights w;
  w.token_embedding = MatrixXd::Zero(vocab, d);
  w.position_embedding = MatrixXd::Zero(c.max_seq_len, d);
  for (std::size_t i = 0; i < c.layers; ++i) {
    BlockWeights b;
    b.attn_norm = MatrixXd::Ones(d, 1);
    b.q = make_linear(d, d, false, c.adapter);
    b.k = make_linear(d, d, false, c.adapter);
    b.v = make_linear(d, d, false, c.adapter);
    b.o = make_linear(d, d, false, c.adapter);
    b.mlp_norm = MatrixXd::Ones(d, 1);
    b.fc1 = make_linear(m, d, true, c.adapter);
    b.fc2 = make_linear(d, m, true, c.adapter);
    w.blocks.push_back(std::move(b));
  }
  w.final_norm = MatrixXd::Ones(d, 1);
  w.unembedding = MatrixXd::Zero(vocab, d);
  return w;
}

MatrixXd linear_forward(const LinearWeights& l, const MatrixXd& x,
                        double scale, MatrixXd& xa) {
  MatrixXd y = x * l.w.transpose();
  if (l.b.size() != 0) y.rowwise() += l.b.col(0).transpose();
  if (l.lora_a.size() != 0) {
    xa = x * l.lora_a.transpose();
    y.noalias() += scale * (xa * l.lora_b.transpose());
  }
  return y;
}

// Returns dL/dx and accumulates parameter gradients into g.
MatrixXd linear_backward(const LinearWeights& l, LinearWeights& g,
                         const MatrixXd& x, const MatrixXd& xa,
                         const MatrixXd& dy, double scale,
                         bool base_trainable) {
  MatrixXd dx = dy * l.w;
  if (base_trainable) {
    g.w.noalias() += dy.transpose() * x;
    if (l.b.size() != 0) g.b.col(0) += dy.colwise().sum().transpose();
  }
  if (l.lora_a.size() != 0) {
    const MatrixXd dyb = dy * l.lora_b;
    g.lora_b.noalias() += scale * (dy.transpose() * xa);
    g.lora_a.noalias() += scale * (dyb.transpose() * x);
    dx.noalias() += scale * (dyb * l.lora_a);
  }
  return dx;
}

MatrixXd rms_forward(const MatrixXd& x, const MatrixXd& gain, double eps,
                     VectorXd& inv_rms) {
  const double d = static_cast<double>(x.cols());
  inv_rms = ((x.array().square().rowwise().sum() / d) + eps).rsqrt().matrix();
  ArrayXXd y = x.array().colwise() * inv_rms.array();
  y.rowwise() *= gain.col(0).transpose().array();
  return y.matrix();
}

MatrixXd rms_backward(const MatrixXd& x, const MatrixXd& gain,
                      const VectorXd& inv_rms, const MatrixXd& dy,
                      MatrixXd* d_gain) {
  const double d = static_cast<double>(x.cols());
  if (d_gain != nullptr) {
    const ArrayXXd xhat = x.array().colwise() * inv_rms.array();
    d_gain->col(0) += (dy.array() * xhat).colwise().sum().transpose().matrix();
  }
  ArrayXXd gy = dy.array();
  gy.rowwise() *= gain.col(0).transpose().array();
  const VectorXd dot = (gy * x.array()).rowwise().sum().matrix();
  const Eigen::ArrayXd coef = dot.array() * inv_rms.array().cube() / d;
  return ((gy.colwise() * inv_rms.array()) - (x.array().colwise() * coef))
      .matrix();
}

double gelu(double x) {
  const double u = kSqrt2OverPi * (x + kGeluCubic * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_grad(double x) {
  const double u = kSqrt2OverPi * (x + kGeluCubic * x * x * x);
  const double t = std::tanh(u);
  return 0.5 * (1.0 + t) +
         0.5 * x * (1.0 - t * t) * kSqrt2OverPi *
             (1.0 + 3.0 * kGeluCubic * x * x);
}

std::string preview(std::string_view s) {
  constexpr std::size_t kMax = 48;
  if (s.size() <= kMax) return std::string(s);
  return std::string(s.substr(0, kMax)) + "...";
}

}  // namespace

struct TinyTransformer::Forward {
  struct Block {
    MatrixXd x_in, n1, q, k, v, q_xa, k_xa, v_xa;
    VectorXd inv1;
    std::vector<MatrixXd> probs;
    MatrixXd attn, o_xa;
    MatrixXd x_mid, n2, h_pre, h_act, fc1_xa, fc2_xa;
    VectorXd inv2;
  };
  std::vector<Block> blocks;
  MatrixXd x_final;
  VectorXd inv_final;
  MatrixXd out;
};

TinyTransformer::TinyTransformer(TinyTransformerConfig config,
                                 WordTokenizer tokenizer)
    : config_(std::move(config)), tokenizer_(std::move(tokenizer)) {
  config_.validate();
  weights_ = make_shapes(config_, tokenizer_.vocab_size());
  grads_ = make_shapes(config_, tokenizer_.vocab_size());
  zero_grad();

  // Adapters draw from their own stream so base weights match an
  // adapter-free model with the same seed.
  Rng rng(config_.seed);
  Rng adapter_rng(config_.seed ^ 0x9e3779b97f4a7c15ULL);
  for_each_tensor(weights_, [&](const std::string& name, MatrixXd& m,
                                bool adapter) {
    if (name.ends_with("norm") || name.ends_with(".b") ||
        name.ends_with("lora_b")) {
      return;  // ones / zeros from make_shapes
    }
    double std_dev = 1.0 / std::sqrt(static_cast<double>(m.cols()));
    if (name.ends_with("embedding") && name != "unembedding") {
      std_dev = config_.embedding_std;
    }
    Rng& source = adapter ? adapter_rng : rng;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = std_dev * source.normal();
      }
    }
  });
}

std::vector<TokenId> TinyTransformer::text_ids(std::string_view text) const {
  std::vector<TokenId> ids{tokenizer_.bos_id()};
  const auto body = tokenizer_.encode(text);
  if (body.empty()) {
    throw ArgumentError("text '" + preview(text) + "' encodes to no tokens");
  }
  ids.insert(ids.end(), body.begin(), body.end());
  if (ids.size() > config_.max_seq_len) {
    throw LengthError("text '" + preview(text) + "' needs " +
                      std::to_string(ids.size()) + " positions, context is " +
                      std::to_string(config_.max_seq_len));
  }
  return ids;
}

std::vector<TokenId> TinyTransformer::pair_ids(
    std::string_view prompt, std::string_view response,
    std::size_t* response_start) const {
  std::vector<TokenId> ids{tokenizer_.bos_id()};
  const auto p = tokenizer_.encode(prompt);
  const auto r = tokenizer_.encode(response);
  ids.insert(ids.end(), p.begin(), p.end());
  *response_start = ids.size();
  ids.insert(ids.end(), r.begin(), r.end());
  if (ids.size() > config_.max_seq_len) {
    throw LengthError("pair (prompt '" + preview(prompt) + "', response '" +
                      preview(response) + "') needs " +
                      std::to_string(ids.size()) +
                      " positions, context is " +
                      std::to_string(config_.max_seq_len));
  }
  return ids;
}

void TinyTransformer::run_forward(const std::vector<TokenId>& ids,
                                  Forward& fw) const {
  const auto t_len = static_cast<Eigen::Index>(ids.size());
  const auto d = static_cast<Eigen::Index>(config_.hidden_dim);
  const auto dh = d / static_cast<Eigen::Index>(config_.heads);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const double scale = config_.adapter ? config_.adapter->scale() : 0.0;
  const double eps = config_.norm_eps;

  MatrixXd x(t_len, d);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    x.row(t) = weights_.token_embedding.row(ids[t]) +
               weights_.position_embedding.row(t);
  }

  fw.blocks.resize(config_.layers);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const BlockWeights& w = weights_.blocks[l];
    Forward::Block& c = fw.blocks[l];
    c.x_in = x;
    c.n1 = rms_forward(x, w.attn_norm, eps, c.inv1);
    c.q = linear_forward(w.q, c.n1, scale, c.q_xa);
    c.k = linear_forward(w.k, c.n1, scale, c.k_xa);
    c.v = linear_forward(w.v, c.n1, scale, c.v_xa);
    c.attn.resize(t_len, d);
    c.probs.resize(config_.heads);
    for (std::size_t h = 0; h < config_.heads; ++h) {
      const auto off = static_cast<Eigen::Index>(h) * dh;
      MatrixXd s = c.q.middleCols(off, dh) * c.k.middleCols(off, dh).transpose();
      s *= inv_sqrt;
      MatrixXd& p = c.probs[h];
      p = MatrixXd::Zero(t_len, t_len);
      for (Eigen::Index i = 0; i < t_len; ++i) {
        const double mx = s.row(i).head(i + 1).maxCoeff();
        double sum = 0.0;
        for (Eigen::Index j = 0; j <= i; ++j) {
          p(i, j) = std::exp(s(i, j) - mx);
          sum += p(i, j);
        }
        p.row(i).head(i + 1) /= sum;
      }
      c.attn.middleCols(off, dh) = p * c.v.middleCols(off, dh);
    }
    x += linear_forward(w.o, c.attn, scale, c.o_xa);
    c.x_mid = x;
    c.n2 = rms_forward(x, w.mlp_norm, eps, c.inv2);
    c.h_pre = linear_forward(w.fc1, c.n2, scale, c.fc1_xa);
    c.h_act = c.h_pre.unaryExpr([](double v) { return gelu(v); });
    x += linear_forward(w.fc2, c.h_act, scale, c.fc2_xa);
  }
  fw.x_final = x;
  fw.out = rms_forward(x, weights_.final_norm, eps, fw.inv_final);
}

void TinyTransformer::run_backward(const std::vector<TokenId>& ids,
                                   const Forward& fw, const MatrixXd& d_out) {
  const bool base = !config_.adapter.has_value();
  const double scale = config_.adapter ? config_.adapter->scale() : 0.0;
  const auto d = static_cast<Eigen::Index>(config_.hidden_dim);
  const auto dh = d / static_cast<Eigen::Index>(config_.heads);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto t_len = static_cast<Eigen::Index>(ids.size());

  MatrixXd dx = rms_backward(fw.x_final, weights_.final_norm, fw.inv_final,
                             d_out, base ? &grads_.final_norm : nullptr);

  for (std::size_t li = config_.layers; li-- > 0;) {
    const BlockWeights& w = weights_.blocks[li];
    BlockWeights& g = grads_.blocks[li];
    const Forward::Block& c = fw.blocks[li];

    // MLP residual branch.
    MatrixXd d_act =
        linear_backward(w.fc2, g.fc2, c.h_act, c.fc2_xa, dx, scale, base);
    const MatrixXd d_pre =
        (d_act.array() *
         c.h_pre.unaryExpr([](double v) { return gelu_grad(v); }).array())
            .matrix();
    const MatrixXd d_n2 =
        linear_backward(w.fc1, g.fc1, c.n2, c.fc1_xa, d_pre, scale, base);
    dx += rms_backward(c.x_mid, w.mlp_norm, c.inv2, d_n2,
                       base ? &g.mlp_norm : nullptr);

    // Attention residual branch.
    const MatrixXd d_attn =
        linear_backward(w.o, g.o, c.attn, c.o_xa, dx, scale, base);
    MatrixXd dq = MatrixXd::Zero(t_len, d);
    MatrixXd dk = MatrixXd::Zero(t_len, d);
    MatrixXd dv = MatrixXd::Zero(t_len, d);
    for (std::size_t h = 0; h < config_.heads; ++h) {
      const auto off = static_cast<Eigen::Index>(h) * dh;
      const MatrixXd& p = c.probs[h];
      const auto d_o = d_attn.middleCols(off, dh);
      const MatrixXd dp = d_o * c.v.middleCols(off, dh).transpose();
      dv.middleCols(off, dh).noalias() = p.transpose() * d_o;
      const VectorXd row_dot = (dp.array() * p.array()).rowwise().sum();
      MatrixXd ds = (p.array() * (dp.colwise() - row_dot).array()).matrix();
      ds *= inv_sqrt;
      dq.middleCols(off, dh).noalias() = ds * c.k.middleCols(off, dh);
      dk.middleCols(off, dh).noalias() = ds.transpose() * c.q.middleCols(off, dh);
    }
    MatrixXd d_n1 = linear_backward(w.q, g.q, c.n1, c.q_xa, dq, scale, base);
    d_n1 += linear_backward(w.k, g.k, c.n1, c.k_xa, dk, scale, base);
    d_n1 += linear_backward(w.v, g.v, c.n1, c.v_xa, dv, scale, base);
    dx += rms_backward(c.x_in, w.attn_norm, c.inv1, d_n1,
                       base ? &g.attn_norm : nullptr);
  }

  if (base) {
    for (Eigen::Index t = 0; t < t_len; ++t) {
      grads_.token_embedding.row(ids[t]) += dx.row(t);
      grads_.position_embedding.row(t) += dx.row(t);
    }
  }
}

double TinyTransformer::response_logprob(const std::vector<TokenId>& ids,
                                         std::size_t start, const Forward& fw,
                                         MatrixXd* d_logits,
                                         double upstream) const {
  const auto n = static_cast<Eigen::Index>(ids.size() - start);
  if (n == 0) return 0.0;
  const auto first = static_cast<Eigen::Index>(start) - 1;
  const MatrixXd logits =
      fw.out.middleRows(first, n) * weights_.unembedding.transpose();
  if (d_logits != nullptr) d_logits->resize(n, logits.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mx = logits.row(i).maxCoeff();
    const Eigen::ArrayXd e = (logits.row(i).array() - mx).exp().transpose();
    const double sum = e.sum();
    const TokenId target = ids[start + i];
    total += logits(i, target) - mx - std::log(sum);
    if (d_logits != nullptr) {
      d_logits->row(i) = (-upstream / sum) * e.transpose().matrix();
      (*d_logits)(i, target) += upstream;
    }
  }
  return total;
}

double TinyTransformer::sequence_logprob(std::string_view prompt,
                                         std::string_view response) const {
  std::size_t start = 0;
  const auto ids = pair_ids(prompt, response, &start);
  if (start == ids.size()) return 0.0;
  Forward fw;
  run_forward(ids, fw);
  return response_logprob(ids, start, fw, nullptr, 0.0);
}

class TinyTransformer::Tape final : public LogprobTape {
 public:
  Tape(TinyTransformer& model, std::vector<TokenId> ids, std::size_t start)
      : model_(model), ids_(std::move(ids)), start_(start) {
    if (start_ < ids_.size()) {
      model_.run_forward(ids_, fw_);
      value_ = model_.response_logprob(ids_, start_, fw_, nullptr, 0.0);
    }
  }

  double value() const override { return value_; }

  void backward(double upstream) override {
    if (start_ == ids_.size()) return;
    MatrixXd d_logits;
    model_.response_logprob(ids_, start_, fw_, &d_logits, upstream);
    const auto first = static_cast<Eigen::Index>(start_) - 1;
    const auto n = d_logits.rows();
    if (!model_.config_.adapter) {
      model_.grads_.unembedding.noalias() +=
          d_logits.transpose() * fw_.out.middleRows(first, n);
    }
    MatrixXd d_out = MatrixXd::Zero(fw_.out.rows(), fw_.out.cols());
    d_out.middleRows(first, n) = d_logits * model_.weights_.unembedding;
    model_.run_backward(ids_, fw_, d_out);
  }

 private:
  TinyTransformer& model_;
  std::vector<TokenId> ids_;
  std::size_t start_;
  Forward fw_;
  double value_ = 0.0;
};

std::unique_ptr<LogprobTape> TinyTransformer::record_sequence_logprob(
    std::string_view prompt, std::string_view response) {
  if (mode_ == ScorerMode::kFrozen) {
    throw TrainingError("cannot backpropagate through a frozen scorer");
  }
  std::size_t start = 0;
  auto ids = pair_ids(prompt, response, &start);
  return std::make_unique<Tape>(*this, std::move(ids), start);
}

MatrixXd TinyTransformer::hidden_states(const std::vector<TokenId>& ids) const {
  if (ids.empty() || ids.size() > config_.max_seq_len) {
    throw LengthError("sequence length " + std::to_string(ids.size()) +
                      " outside [1, " + std::to_string(config_.max_seq_len) +
                      "]");
  }
  Forward fw;
  run_forward(ids, fw);
  return fw.out;
}

MatrixXd TinyTransformer::logits(const std::vector<TokenId>& ids) const {
  return hidden_states(ids) * weights_.unembedding.transpose();
}

VectorXd TinyTransformer::last_token_hidden(std::string_view text) const {
  const auto ids = text_ids(text);
  const MatrixXd h = hidden_states(ids);
  return h.row(h.rows() - 1).transpose();
}

VectorXd TinyTransformer::mean_hidden(std::string_view text) const {
  const auto ids = text_ids(text);
  const MatrixXd h = hidden_states(ids);
  return h.bottomRows(h.rows() - 1).colwise().mean().transpose();
}

VectorXd TinyTransformer::unembed(const VectorXd& hidden) const {
  if (hidden.size() != static_cast<Eigen::Index>(config_.hidden_dim)) {
    throw ArgumentError("embedding dimension " + std::to_string(hidden.size()) +
                        " does not match hidden_dim " +
                        std::to_string(config_.hidden_dim));
  }
  return weights_.unembedding * hidden;
}

std::unique_ptr<CausalScorer> TinyTransformer::snapshot_frozen() const {
  auto copy = std::make_unique<TinyTransformer>(*this);
  copy->mode_ = ScorerMode::kFrozen;
  return copy;
}

std::vector<ParameterView> TinyTransformer::trainable_parameters() {
  std::vector<ParameterView> views;
  std::vector<std::pair<std::string, MatrixXd*>> grads;
  for_each_tensor(grads_, [&](const std::string& name, MatrixXd& m, bool) {
    grads.emplace_back(name, &m);
  });
  std::size_t i = 0;
  const bool lora = config_.adapter.has_value();
  for_each_tensor(weights_, [&](const std::string& name, MatrixXd& m,
                                bool adapter) {
    MatrixXd* g = grads[i++].second;
    if (adapter != lora) return;
    views.push_back({name, std::span<double>(m.data(), m.size()),
                     std::span<double>(g->data(), g->size())});
  });
  return views;
}

void TinyTransformer::zero_grad() {
  for_each_tensor(grads_,
                  [](const std::string&, MatrixXd& m, bool) { m.setZero(); });
}

std::vector<ScoredToken> unembed_topk(const CausalScorer& model,
                                      const VectorXd& embedding,
                                      std::size_t k) {
  if (k > model.vocab_size()) {
    throw ArgumentError("k=" + std::to_string(k) + " exceeds vocabulary size " +
                        std::to_string(model.vocab_size()));
  }
  const VectorXd logits = model.unembed(embedding);
  std::vector<TokenId> order(logits.size());
  std::iota(order.begin(), order.end(), TokenId{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(k),
                    order.end(), [&](TokenId a, TokenId b) {
                      if (logits[a] != logits[b]) return logits[a] > logits[b];
                      return a < b;
                    });
  std::vector<ScoredToken> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back({order[i], model.tokenizer().piece(order[i]),
                   logits[order[i]]});
  }
  return out;
}

}  // namespace semalign
