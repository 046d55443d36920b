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

#include "semalign/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <spdlog/spdlog.h>

#include "semalign/error.h"
#include "semalign/vector_ops.h"

namespace semalign {

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ArgumentError("spearman needs two equal-length inputs of size >= 2");
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw NumericError("correlation undefined for a constant input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double uniformity(const Eigen::MatrixXd& rows) {
  const Eigen::Index n = rows.rows();
  if (n < 2) throw ArgumentError("uniformity needs at least 2 rows");
  Eigen::MatrixXd f = rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = f.row(i).norm();
    if (norm == 0.0) {
      throw NumericError("zero-norm embedding at row " + std::to_string(i));
    }
    f.row(i) /= norm;
  }
  std::vector<double> exponents;
  exponents.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      exponents.push_back(-2.0 * (f.row(i) - f.row(j)).squaredNorm());
    }
  }
  return log_sum_exp(exponents) -
         std::log(static_cast<double>(exponents.size()));
}

IsotropyResult isotropy(const Eigen::MatrixXd& rows) {
  if (rows.rows() < 2 || rows.cols() < 2) {
    throw ArgumentError("isotropy needs n >= 2 and d >= 2");
  }
  const Eigen::MatrixXd gram = rows.transpose() * rows;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) {
    throw NumericError("eigendecomposition failed");
  }
  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& vectors = solver.eigenvectors();
  if (values.cwiseAbs().maxCoeff() == 0.0) {
    throw ArgumentError("isotropy undefined for an all-zero matrix");
  }

  IsotropyResult result;
  const Eigen::Index d = values.size();
  for (Eigen::Index j = d - 1; j >= 0; --j) result.eigenvalues.push_back(values[j]);
  const double tol = 1e-9 * std::abs(result.eigenvalues.front());
  for (std::size_t j = 1; j < result.eigenvalues.size(); ++j) {
    if (std::abs(result.eigenvalues[j - 1] - result.eigenvalues[j]) <= tol) {
      ++result.degenerate_pairs;
    }
  }

  double lo = INFINITY, hi = -INFINITY;
  std::vector<double> proj(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index j = d - 1; j >= 0; --j) {
    const Eigen::VectorXd p = rows * vectors.col(j);
    for (double sign : {1.0, -1.0}) {
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        proj[static_cast<std::size_t>(i)] = sign * p[i];
      }
      const double log_z = log_sum_exp(proj);
      lo = std::min(lo, log_z);
      hi = std::max(hi, log_z);
    }
  }
  result.log_z_min = lo;
  result.log_z_max = hi;
  result.score = std::exp(lo - hi);
  return result;
}

double isotropy_score(const Eigen::MatrixXd& rows) {
  return isotropy(rows).score;
}

double gar(std::span<const GarInput> inputs,
           const TokenNormalizer& normalizer) {
  auto norm = [&](const std::string& t) {
    return normalizer ? normalizer(t) : t;
  };
  std::set<std::string> all_surface;
  std::set<std::string> hits;
  for (const auto& in : inputs) {
    if (in.aligned.size() > in.k) {
      throw ArgumentError("aligned set larger than k=" + std::to_string(in.k));
    }
    std::set<std::string> surface;
    for (const auto& t : in.surface) surface.insert(norm(t));
    for (const auto& t : in.aligned) {
      const auto n = norm(t);
      if (surface.contains(n)) hits.insert(n);
    }
    all_surface.insert(surface.begin(), surface.end());
  }
  if (all_surface.empty()) {
    throw ArgumentError("GAR needs at least one non-empty surface token set");
  }
  return static_cast<double>(hits.size()) /
         static_cast<double>(all_surface.size());
}

Projection2d pca_2d(const Eigen::MatrixXd& rows) {
  if (rows.rows() < 3 || rows.cols() < 2) {
    throw ArgumentError("PCA projection needs n >= 3 and d >= 2");
  }
  const Eigen::MatrixXd centered =
      rows.rowwise() - rows.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  Eigen::MatrixXd components = svd.matrixV().leftCols(2);

  Projection2d out;
  const double n1 = static_cast<double>(rows.rows() - 1);
  out.variance = Eigen::Vector2d(s[0] * s[0] / n1, s[1] * s[1] / n1);
  out.degenerate = !(s[1] > 1e-12 * s[0]);
  for (Eigen::Index k = 0; k < 2; ++k) {
    Eigen::Index arg = 0;
    components.col(k).cwiseAbs().maxCoeff(&arg);
    if (components(arg, k) < 0.0) components.col(k) *= -1.0;
  }
  out.coords = centered * components;
  if (out.degenerate) {
    spdlog::warn("PCA projection is degenerate (rank < 2)");
    out.coords.col(1).setZero();
    out.variance[1] = 0.0;
  }
  return out;
}

}  // namespace semalign
