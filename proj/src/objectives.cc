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

#include "semalign/objectives.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semalign/error.h"
#include "semalign/vector_ops.h"

namespace semalign {

void CandidateScores::validate() const {
  if (scores.empty()) throw ArgumentError("candidate set is empty");
  if (!labels.empty() && labels.size() != scores.size()) {
    throw ArgumentError("candidate labels do not match scores");
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw NumericError("non-finite score at candidate " + std::to_string(i));
    }
  }
}

void DpoBatchLogps::validate() const {
  const std::size_t n = policy_chosen.size();
  if (n == 0 || policy_rejected.size() != n || ref_chosen.size() != n ||
      ref_rejected.size() != n) {
    throw ArgumentError("DPO batch vectors must share a length >= 1");
  }
  if (!std::isfinite(beta) || beta < 0.0 || (beta == 0.0 && !diagnostic)) {
    throw ArgumentError("beta must be positive (zero only in diagnostic mode)");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(policy_chosen[i]) || !std::isfinite(policy_rejected[i]) ||
        !std::isfinite(ref_chosen[i]) || !std::isfinite(ref_rejected[i])) {
      throw NumericError("non-finite log-probability in pair " +
                         std::to_string(i));
    }
  }
}

namespace {

double reward(double beta, double policy, double ref) {
  return beta * (policy - ref);
}

}  // namespace

DpoLossResult dpo_loss(const DpoBatchLogps& batch) {
  batch.validate();
  DpoLossResult out;
  out.margins.reserve(batch.size());
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double m =
        reward(batch.beta, batch.policy_chosen[i], batch.ref_chosen[i]) -
        reward(batch.beta, batch.policy_rejected[i], batch.ref_rejected[i]);
    out.margins.push_back(m);
    total += softplus(-m);
  }
  out.loss = total / static_cast<double>(batch.size());
  return out;
}

double dpo_loss_softmax_form(const DpoBatchLogps& batch) {
  batch.validate();
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double rw =
        reward(batch.beta, batch.policy_chosen[i], batch.ref_chosen[i]);
    const double rl =
        reward(batch.beta, batch.policy_rejected[i], batch.ref_rejected[i]);
    // log(e^rw + e^rl) - rw, with the max factored out before subtracting.
    const double hi = std::max(rw, rl);
    const double lo = std::min(rw, rl);
    total += (hi - rw) + std::log1p(std::exp(lo - hi));
  }
  return total / static_cast<double>(batch.size());
}

DpoLossGradient dpo_loss_gradient(const DpoBatchLogps& batch) {
  const auto result = dpo_loss(batch);
  const std::size_t n = batch.size();
  DpoLossGradient g;
  g.policy_chosen.resize(n);
  g.policy_rejected.resize(n);
  g.ref_chosen.resize(n);
  g.ref_rejected.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // d softplus(-m) / dm = -sigmoid(-m)
    const double dm =
        -sigmoid(-result.margins[i]) / static_cast<double>(n) * batch.beta;
    g.policy_chosen[i] = dm;
    g.ref_chosen[i] = -dm;
    g.policy_rejected[i] = -dm;
    g.ref_rejected[i] = dm;
  }
  return g;
}

double pl_ranking_prob(const CandidateScores& scores, const Ranking& ranking) {
  scores.validate();
  const std::size_t n = scores.size();
  std::vector<bool> seen(n, false);
  if (ranking.size() != n) {
    throw ArgumentError("ranking has " + std::to_string(ranking.size()) +
                        " entries for " + std::to_string(n) + " candidates");
  }
  for (std::size_t idx : ranking) {
    if (idx >= n || seen[idx]) {
      throw ArgumentError("ranking is not a permutation of the candidates");
    }
    seen[idx] = true;
  }
  std::vector<double> ordered(n);
  for (std::size_t k = 0; k < n; ++k) ordered[k] = scores.scores[ranking[k]];
  double log_p = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    log_p += ordered[k] -
             log_sum_exp(std::span<const double>(ordered).subspan(k));
  }
  return std::exp(log_p);
}

double pl_best_prob(const CandidateScores& scores, std::size_t best) {
  scores.validate();
  if (best >= scores.size()) {
    throw ArgumentError("candidate index " + std::to_string(best) +
                        " out of range for " + std::to_string(scores.size()) +
                        " candidates");
  }
  return std::exp(scores.scores[best] - log_sum_exp(scores.scores));
}

std::map<Ranking, double> pl_enumeration_oracle(const CandidateScores& scores) {
  scores.validate();
  const std::size_t n = scores.size();
  if (n > 8) {
    throw LengthError("enumeration limited to 8 candidates, got " +
                        std::to_string(n));
  }
  const double mx = *std::max_element(scores.scores.begin(),
                                      scores.scores.end());
  std::vector<double> weight(n);
  for (std::size_t i = 0; i < n; ++i) weight[i] = std::exp(scores.scores[i] - mx);

  std::map<Ranking, double> out;
  Ranking perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  do {
    double p = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      double rest = 0.0;
      for (std::size_t j = k; j < n; ++j) rest += weight[perm[j]];
      p *= weight[perm[k]] / rest;
    }
    out.emplace(perm, p);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

std::vector<double> infonce_scores(const Eigen::VectorXd& anchor,
                                   const Eigen::VectorXd& positive,
                                   std::span<const Eigen::VectorXd> negatives,
                                   double temperature) {
  if (!(temperature > 0.0)) throw ArgumentError("temperature must be positive");
  if (negatives.empty()) throw ArgumentError("InfoNCE needs a negative");
  std::vector<double> s;
  s.reserve(negatives.size() + 1);
  s.push_back(cosine(anchor, positive) / temperature);
  for (const auto& n : negatives) s.push_back(cosine(anchor, n) / temperature);
  return s;
}

double infonce_loss_from_scores(std::span<const double> scores) {
  if (scores.size() < 2) throw ArgumentError("InfoNCE needs a negative");
  return log_sum_exp(scores) - scores[0];
}

std::vector<double> infonce_score_gradient(std::span<const double> scores) {
  const double lse = log_sum_exp(scores);
  std::vector<double> g(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    g[i] = std::exp(scores[i] - lse);
  }
  g[0] -= 1.0;
  return g;
}

double infonce_loss(const Eigen::VectorXd& anchor,
                    const Eigen::VectorXd& positive,
                    std::span<const Eigen::VectorXd> negatives,
                    double temperature) {
  const auto s = infonce_scores(anchor, positive, negatives, temperature);
  return infonce_loss_from_scores(s);
}

}  // namespace semalign
