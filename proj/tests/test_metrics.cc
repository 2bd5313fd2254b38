// tests/test_metrics.cc

// Copyright 2026 The embedspace Authors

// See COPYING in the top-level directory for clarification regarding
// multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <random>

#include "doctest.h"
#include "embedspace/error.h"
#include "embedspace/metrics.h"
#include "oracles.h"

using namespace embedspace;

namespace {

ScoreSet random_fixture(std::mt19937_64& rng, std::size_t n, bool ties) {
  std::uniform_int_distribution<std::size_t> count(1, n - 1);
  const std::size_t nt = count(rng);
  std::normal_distribution<double> g(0.0, 1.5);
  std::vector<double> tar, non;
  auto draw = [&](double shift) {
    const double v = g(rng) + shift;
    return ties ? std::round(v * 2) / 2 : v;
  };
  for (std::size_t i = 0; i < nt; ++i) tar.push_back(draw(1.5));
  for (std::size_t i = nt; i < n; ++i) non.push_back(draw(-2.0));
  return oracle::make_scores(tar, non);
}

}  // namespace

TEST_CASE("EER hand fixture is one third") {
  const ScoreSet s = oracle::make_scores({0.9, 0.8, 0.7}, {0.1, 0.2, 0.75});
  CHECK(compute_eer(s) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(std::abs(oracle::eer(oracle::split(s)) - 1.0 / 3.0) < 1e-15);
}

TEST_CASE("EER edge cases") {
  CHECK(compute_eer(oracle::make_scores({2, 3}, {0, 1})) == 0.0);
  CHECK(compute_eer(oracle::make_scores({1, 1, 1}, {1, 1})) == 0.5);
  CHECK_THROWS_AS(compute_eer(oracle::make_scores({1, 2}, {})), Error);
  CHECK_THROWS_AS(compute_eer(oracle::make_scores({}, {1})), Error);
}

TEST_CASE("cost boundary arithmetic") {
  const CostParams p{1.0, 1.0, {0.01}};
  // Separated and calibrated.
  const ScoreSet sep = oracle::make_scores({20, 21, 22}, {-20, -21});
  CHECK(compute_min_cost(sep, p) == 0.0);
  CHECK(compute_act_cost(sep, p) < 0.05);
  // All targets below all nontargets: the best threshold rejects everything.
  const ScoreSet inverted = oracle::make_scores({-5, -6}, {5, 6});
  CHECK(compute_min_cost(inverted, p) == doctest::Approx(1.0));
  CHECK(normalized_cost(0.0, 1.0, 0.01, p) == doctest::Approx(99.0));
}

TEST_CASE("metrics agree with the exhaustive threshold sweep") {
  std::mt19937_64 rng(2024);
  const CostParams profiles[] = {CostParams::cmn2(), CostParams::vast(), CostParams{2.0, 0.5, {0.2, 0.03}}};
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t n = rep == 0 ? 200 : 2 + rng() % 999;
    const ScoreSet s = random_fixture(rng, n, rep % 3 == 0);
    const oracle::Labeled l = oracle::split(s);
    CHECK(std::abs(compute_eer(s) - oracle::eer(l)) < 1e-12);
    for (const auto& p : profiles) {
      CHECK(std::abs(compute_min_cost(s, p) - oracle::min_cost(l, p.p_targets, p.c_miss, p.c_fa)) < 1e-12);
      CHECK(std::abs(compute_act_cost(s, p) - oracle::act_cost(l, p.p_targets, p.c_miss, p.c_fa)) < 1e-12);
    }
  }
}

TEST_CASE("minC never exceeds actC") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    const ScoreSet s = random_fixture(rng, 50 + rng() % 300, rep % 2);
    for (const auto& p : {CostParams::cmn2(), CostParams::vast()})
      CHECK(compute_min_cost(s, p) <= compute_act_cost(s, p) + 1e-15);
  }
}

TEST_CASE("EER and minC are rank statistics, actC is not") {
  std::mt19937_64 rng(3);
  const ScoreSet s = random_fixture(rng, 400, false);
  ScoreSet t = s;
  for (double& v : t.scores) v = std::exp(v / 2) - 3.0;
  const CostParams p = CostParams::cmn2();
  CHECK(compute_eer(t) == doctest::Approx(compute_eer(s)).epsilon(1e-12));
  CHECK(compute_min_cost(t, p) == doctest::Approx(compute_min_cost(s, p)).epsilon(1e-12));
  CHECK(compute_act_cost(t, p) != doctest::Approx(compute_act_cost(s, p)));
}

TEST_CASE("metrics ignore trial order") {
  std::mt19937_64 rng(4);
  const ScoreSet s = random_fixture(rng, 300, true);
  ScoreSet r;
  for (std::size_t i = s.size(); i-- > 0;) {
    r.trials.add(s.trials[i]);
    r.scores.push_back(s.scores[i]);
  }
  const CostParams p = CostParams::cmn2();
  CHECK(compute_eer(r) == compute_eer(s));
  CHECK(compute_min_cost(r, p) == compute_min_cost(s, p));
  CHECK(compute_act_cost(r, p) == compute_act_cost(s, p));
}

TEST_CASE("cost profiles and formatting") {
  CHECK(CostParams::profile("cmn2").p_targets == std::vector<double>{0.01, 0.005});
  CHECK(CostParams::profile("vast").p_targets == std::vector<double>{0.05});
  CHECK_THROWS_AS(CostParams::profile("sre99"), Error);
  CHECK_THROWS_AS(compute_min_cost(oracle::make_scores({1}, {0}), CostParams{1, 1, {}}), Error);
  CHECK_THROWS_AS(compute_min_cost(oracle::make_scores({1}, {0}), CostParams{-1, 1, {0.1}}), Error);
  CHECK(format_metrics_line({0.0981, 0.546, 0.61}) == "09.81 / 0.546 / 0.610");
  CHECK(format_metrics_line({0.1264, 0.685, 0.7}) == "12.64 / 0.685 / 0.700");
}

TEST_CASE("non-finite scores are rejected") {
  ScoreSet s = oracle::make_scores({1, 2}, {0});
  s.scores[0] = std::nan("");
  CHECK_THROWS_AS(compute_eer(s), Error);
}
