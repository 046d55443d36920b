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

#include "semalign/vector_ops.h"

#include <algorithm>
#include <cmath>

#include "semalign/error.h"

namespace semalign {

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw ArgumentError("cosine of vectors with dimensions " +
                        std::to_string(a.size()) + " and " +
                        std::to_string(b.size()));
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    throw NumericError("cosine similarity undefined for a zero vector");
  }
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double log_sum_exp(std::span<const double> x) {
  const double mx = *std::max_element(x.begin(), x.end());
  if (std::isinf(mx)) return mx;
  double sum = 0.0;
  for (double v : x) sum += std::exp(v - mx);
  return mx + std::log(sum);
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace semalign
