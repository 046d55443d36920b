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

#ifndef SEMALIGN_VECTOR_OPS_H_
#define SEMALIGN_VECTOR_OPS_H_

#include <span>

#include <Eigen/Core>

namespace semalign {

// dot(a, b) / (|a| |b|) clamped to [-1, 1]. Throws NumericError on a zero
// vector and ArgumentError on a dimension mismatch.
double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// log(sum(exp(x))) with max subtraction. x must be non-empty.
double log_sum_exp(std::span<const double> x);

// log(1 + exp(x)) without overflow or loss of the small tail.
double softplus(double x);

// 1 / (1 + exp(-x)) without overflow.
double sigmoid(double x);

}  // namespace semalign

#endif  // SEMALIGN_VECTOR_OPS_H_
