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

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "semalign/error.h"
#include "semalign/rng.h"
#include "semalign/vector_ops.h"

using namespace semalign;
using Catch::Approx;

namespace {

DpoBatchLogps single(double pc, double pr, double rc, double rr, double beta) {
  DpoBatchLogps b;
  b.policy_chosen = {pc};
  b.policy_rejected = {pr};
  b.ref_chosen = {rc};
  b.ref_rejected = {rr};
  b.beta = beta;
  return b;
}

}  // namespace

TEST_CASE("dpo_loss examples", "[objectives]") {
  const auto tie = dpo_loss(single(-3, -4, -3, -4, 0.1));
  CHECK(tie.loss == Approx(std::log(2.0)).epsilon(1e-15));
  const auto two = dpo_loss(single(1, -1, 0, 0, 1.0));
  CHECK(two.loss == Approx(0.1269280110429725).epsilon(1e-12));
  CHECK(two.margins.front() == Approx(2.0));
  auto zero = single(-1, -9, -5, -2, 0.0);
  CHECK_THROWS_AS(zero.validate(), ArgumentError);
  zero.diagnostic = true;
  CHECK(dpo_loss(zero).loss == Approx(std::log(2.0)));
  CHECK(dpo_loss_softmax_form(single(1, -1, 0, 0, 1.0)) == Approx(0.1269280110429725));
  CHECK(dpo_loss_softmax_form(single(-2, -2, -1, -1, 0.5)) == Approx(std::log(2.0)));
}

TEST_CASE("dpo_loss is stable at extreme margins", "[objectives]") {
  const auto big = dpo_loss(single(0, -500, 0, 0, 1.0));
  CHECK(big.loss >= 0.0);
  CHECK(big.loss < 1e-200);
  const auto bad = dpo_loss(single(-500, 0, 0, 0, 1.0));
  CHECK(bad.loss == Approx(500.0));
  CHECK(dpo_loss_softmax_form(single(-500, 0, 0, 0, 1.0)) == Approx(500.0));
}

TEST_CASE("dpo validation names the pair", "[objectives]") {
  auto b = single(0, 0, 0, 0, 0.1);
  b.policy_chosen.push_back(NAN);
  b.policy_rejected.push_back(0);
  b.ref_chosen.push_back(0);
  b.ref_rejected.push_back(0);
  try {
    dpo_loss(b);
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("pair 1") != std::string::npos);
  }
  b.ref_rejected.pop_back();
  CHECK_THROWS_AS(dpo_loss(b), ArgumentError);
}

TEST_CASE("dpo properties", "[objectives]") {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const double beta = rng.uniform(0.01, 5.0);
    auto b = single(rng.uniform(-50, 0), rng.uniform(-50, 0), rng.uniform(-50, 0),
                    rng.uniform(-50, 0), beta);
    const auto r = dpo_loss(b);
    CHECK(r.loss >= 0.0);
    CHECK(r.loss == Approx(softplus(-r.margins[0])).epsilon(1e-14));
    CandidateScores s{{beta * (b.policy_chosen[0] - b.ref_chosen[0]),
                       beta * (b.policy_rejected[0] - b.ref_rejected[0])}, {}};
    CHECK(std::abs(r.loss + std::log(pl_best_prob(s, 0))) <= 1e-12 * std::max(1.0, r.loss));
    b.policy_chosen[0] += 0.5;
    CHECK(dpo_loss(b).loss < r.loss);
  }
}

TEST_CASE("Plackett-Luce examples", "[objectives]") {
  CHECK(pl_ranking_prob({{3.0}, {}}, {0}) == 1.0);
  CHECK(pl_ranking_prob({{1.0, 1.0, 1.0}, {}}, {2, 0, 1}) == Approx(1.0 / 6.0).epsilon(1e-14));
  const CandidateScores s{{std::log(2.0), 0.0, 0.0}, {}};
  CHECK(pl_ranking_prob(s, {0, 1, 2}) == Approx(0.25).epsilon(1e-14));
  CHECK(pl_best_prob(s, 0) == Approx(0.5).epsilon(1e-14));
  CHECK(pl_best_prob({{2.0, 2.0, 2.0, 2.0}, {}}, 3) == Approx(0.25));
  CHECK(pl_best_prob({{0.7, -1.2}, {}}, 0) == Approx(sigmoid(1.9)).epsilon(1e-12));
  CHECK_THROWS_AS(pl_ranking_prob(s, {0, 0, 1}), ArgumentError);
  CHECK_THROWS_AS(pl_ranking_prob(s, {0, 1}), ArgumentError);
  CHECK_THROWS_AS(pl_best_prob(s, 3), ArgumentError);
  CHECK_THROWS_AS(pl_best_prob({{0.0, INFINITY}, {}}, 0), NumericError);
  CHECK_THROWS_AS((CandidateScores{{1.0, 2.0}, {"a"}}.validate()), ArgumentError);
}

TEST_CASE("enumeration oracle", "[objectives]") {
  const auto two = pl_enumeration_oracle({{0.0, 0.0}, {}});
  REQUIRE(two.size() == 2);
  CHECK(two.at({0, 1}) == Approx(0.5));
  CHECK(two.at({1, 0}) == Approx(0.5));
  CHECK_THROWS_AS(pl_enumeration_oracle({std::vector<double>(9, 0.0), {}}), LengthError);
  Rng rng(3);
  CandidateScores s{{}, {}};
  for (int i = 0; i < 5; ++i) s.scores.push_back(rng.uniform(-3, 3));
  double total = 0.0;
  std::vector<double> first(5, 0.0);
  for (const auto& [ranking, p] : pl_enumeration_oracle(s)) {
    total += p;
    first[ranking.front()] += p;
    CHECK(pl_ranking_prob(s, ranking) == Approx(p).epsilon(1e-12));
  }
  CHECK(std::abs(total - 1.0) <= 1e-10);
  for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(first[i] - pl_best_prob(s, i)) <= 1e-10);
}

TEST_CASE("softmax shift invariance", "[objectives]") {
  const CandidateScores a{{0.3, -1.0, 2.0, 0.5}, {}};
  CandidateScores b = a;
  for (double& x : b.scores) x += 123.0;
  CHECK(std::abs(pl_ranking_prob(a, {2, 0, 3, 1}) - pl_ranking_prob(b, {2, 0, 3, 1})) <= 1e-10);
  CHECK(std::abs(pl_best_prob(a, 1) - pl_best_prob(b, 1)) <= 1e-10);
  CHECK(std::abs(infonce_loss_from_scores(a.scores) - infonce_loss_from_scores(b.scores)) <=
        1e-10);
}

TEST_CASE("InfoNCE examples", "[objectives]") {
  const Eigen::Vector2d e1(1, 0), e2(0, 1);
  const std::vector<Eigen::VectorXd> orth = {e2};
  CHECK(infonce_loss(e1, e1, orth) == Approx(0.31326168751822286).epsilon(1e-12));
  const std::vector<Eigen::VectorXd> opposite = {-e1};
  CHECK(infonce_loss(e1, e1, opposite) == Approx(0.1269280110429725).epsilon(1e-12));
  const std::vector<Eigen::VectorXd> same = {e2, e2, e2};
  CHECK(infonce_loss(e1, e2, same) == Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(infonce_loss(e1, e1, orth, 0.5) == Approx(std::log1p(std::exp(-2.0))));
  const std::vector<Eigen::VectorXd> zero = {Eigen::Vector2d::Zero()};
  CHECK_THROWS_AS(infonce_loss(e1, e1, zero), NumericError);
  CHECK_THROWS_AS(infonce_loss(e1, e1, {}), ArgumentError);
  CHECK_THROWS_AS(infonce_loss(e1, e1, orth, 0.0), ArgumentError);
}

TEST_CASE("analytic gradients match finite differences", "[objectives]") {
  Rng rng(17);
  for (int t = 0; t < 20; ++t) {
    auto b = single(rng.uniform(-50, 0), rng.uniform(-50, 0), rng.uniform(-50, 0),
                    rng.uniform(-50, 0), 0.1 + rng.uniform());
    const auto g = dpo_loss_gradient(b);
    const double h = 1e-5;
    b.policy_chosen[0] += h;
    const double up = dpo_loss(b).loss;
    b.policy_chosen[0] -= 2 * h;
    const double down = dpo_loss(b).loss;
    b.policy_chosen[0] += h;
    CHECK(g.policy_chosen[0] == Approx((up - down) / (2 * h)).epsilon(1e-4).margin(1e-10));
    CHECK(g.ref_chosen[0] == Approx(-g.policy_chosen[0]));
    CHECK(g.policy_rejected[0] == Approx(-g.policy_chosen[0]));
  }
  const std::vector<double> s = {0.4, -0.2, 1.1};
  const auto gs = infonce_score_gradient(s);
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto p = s, m = s;
    p[i] += 1e-5;
    m[i] -= 1e-5;
    CHECK(gs[i] == Approx((infonce_loss_from_scores(p) - infonce_loss_from_scores(m)) / 2e-5)
                       .epsilon(1e-4));
  }
}
