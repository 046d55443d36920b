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

#ifndef SEMALIGN_METRICS_H_
#define SEMALIGN_METRICS_H_

#include <cstddef>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace semalign {

// 1-based ranks; tied values share the mean of their rank span.
std::vector<double> average_ranks(std::span<const double> x);

// Pearson correlation of average ranks. Throws ArgumentError on length
// mismatch or fewer than 2 values, NumericError when either side is
// constant.
double spearman(std::span<const double> x, std::span<const double> y);

// log of the mean over unordered pairs i < j of exp(-2 |f_i - f_j|^2),
// where f are the rows scaled to unit norm. Needs n >= 2; throws
// NumericError on a zero row.
double uniformity(const Eigen::MatrixXd& rows);

struct IsotropyResult {
  double score = 0.0;  // min Z / max Z over the candidate directions
  std::vector<double> eigenvalues;  // of V^T V, descending
  // Adjacent eigenvalue pairs equal within 1e-9 relative to the largest;
  // their eigenvectors are taken from the solver as-is.
  std::size_t degenerate_pairs = 0;
  double log_z_min = 0.0;
  double log_z_max = 0.0;
};

// Partition function Z(c) = sum_i exp(c . v_i) evaluated at +u_j and -u_j
// for every eigenvector u_j of V^T V. Needs n >= 2 and d >= 2; throws
// ArgumentError when V is all zeros.
IsotropyResult isotropy(const Eigen::MatrixXd& rows);
double isotropy_score(const Eigen::MatrixXd& rows);

struct GarInput {
  std::set<std::string> surface;  // deduplicated tokens of the sentence
  std::set<std::string> aligned;  // top-k aligned tokens
  std::size_t k = 10;
};

using TokenNormalizer = std::function<std::string(const std::string&)>;

// |union_i (aligned_i & surface_i)| / |union_i surface_i|. Exact matches
// unless a normalizer is given, in which case both sides are mapped first.
// Throws ArgumentError when every surface set is empty.
double gar(std::span<const GarInput> inputs,
           const TokenNormalizer& normalizer = {});

struct Projection2d {
  Eigen::MatrixXd coords;  // n x 2, row-aligned with the input
  Eigen::Vector2d variance;  // variance along each component
  bool degenerate = false;  // rank < 2; the second column is zero
};

// Centers the rows and projects onto the two leading principal components.
// Each component is signed so its largest-magnitude loading is positive.
// Needs n >= 3 and d >= 2.
Projection2d pca_2d(const Eigen::MatrixXd& rows);

}  // namespace semalign

#endif  // SEMALIGN_METRICS_H_
