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

#ifndef SEMALIGN_OBJECTIVES_H_
#define SEMALIGN_OBJECTIVES_H_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace semalign {

// Scores s(x, y_i) for N >= 1 candidates.
struct CandidateScores {
  std::vector<double> scores;
  std::vector<std::string> labels;  // optional, empty or one per score

  std::size_t size() const { return scores.size(); }
  // Throws ArgumentError when empty or when labels do not match, and
  // NumericError on a non-finite score.
  void validate() const;
};

// Candidate indices (0-based), best first.
using Ranking = std::vector<std::size_t>;

struct DpoBatchLogps {
  std::vector<double> policy_chosen;
  std::vector<double> policy_rejected;
  std::vector<double> ref_chosen;
  std::vector<double> ref_rejected;
  double beta = 0.1;
  // Allows beta == 0 for diagnostics.
  bool diagnostic = false;

  std::size_t size() const { return policy_chosen.size(); }
  void validate() const;
};

struct DpoLossResult {
  double loss = 0.0;
  // Per pair r_w - r_l with r = beta * (policy - ref).
  std::vector<double> margins;
};

// Mean over pairs of -log sigmoid(r_w - r_l), evaluated as softplus(-m).
DpoLossResult dpo_loss(const DpoBatchLogps& batch);

// The same loss written as a two-way softmax cross-entropy,
// -log(e^{r_w} / (e^{r_w} + e^{r_l})), evaluated with log-sum-exp.
double dpo_loss_softmax_form(const DpoBatchLogps& batch);

// d loss / d input for each of the four log-probability vectors.
struct DpoLossGradient {
  std::vector<double> policy_chosen;
  std::vector<double> policy_rejected;
  std::vector<double> ref_chosen;
  std::vector<double> ref_rejected;
};
DpoLossGradient dpo_loss_gradient(const DpoBatchLogps& batch);

// Plackett-Luce probability of a complete ranking:
//   prod_k exp(s_(k)) / sum_{j >= k} exp(s_(j)).
// Throws ArgumentError unless `ranking` is a permutation of 0..N-1.
double pl_ranking_prob(const CandidateScores& scores, const Ranking& ranking);

// Softmax probability that candidate `best` (0-based) is ranked first.
double pl_best_prob(const CandidateScores& scores, std::size_t best);

// Enumerates all N! rankings with linear-space products. N <= 8.
std::map<Ranking, double> pl_enumeration_oracle(const CandidateScores& scores);

// Cosine similarities divided by temperature, positive first.
std::vector<double> infonce_scores(const Eigen::VectorXd& anchor,
                                   const Eigen::VectorXd& positive,
                                   std::span<const Eigen::VectorXd> negatives,
                                   double temperature = 1.0);

// -log softmax(scores)[0]; the positive occupies index 0.
double infonce_loss_from_scores(std::span<const double> scores);

// d infonce_loss_from_scores / d scores.
std::vector<double> infonce_score_gradient(std::span<const double> scores);

double infonce_loss(const Eigen::VectorXd& anchor,
                    const Eigen::VectorXd& positive,
                    std::span<const Eigen::VectorXd> negatives,
                    double temperature = 1.0);

}  // namespace semalign

#endif  // SEMALIGN_OBJECTIVES_H_
