// tests/test_plda.cc

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

#include <cmath>
#include <random>

#include "doctest.h"
#include "embedspace/error.h"
#include "embedspace/plda.h"
#include "embedspace/synth.h"
#include "embedspace/transforms.h"
#include "oracles.h"

using namespace embedspace;

namespace {

EmbeddingSet synth(int dim, int speakers, int utts, const Matrix& sb, const Matrix& sw, std::uint64_t seed) {
  SynthConfig c;
  c.dim = dim;
  c.n_speakers = speakers;
  c.utts_per_speaker = utts;
  c.between_cov = sb;
  c.within_cov = sw;
  c.seed = seed;
  return generate(c);
}

PldaModel random_model(std::mt19937_64& rng, int d) {
  return {oracle::random_matrix(rng, d, 1), oracle::random_spd(rng, d, 0.1), oracle::random_spd(rng, d, 0.3)};
}

}  // namespace

TEST_CASE("1-D hand case equals half log 4/3") {
  PldaModel m{Vector::Zero(1), Matrix::Ones(1, 1), Matrix::Ones(1, 1)};
  const Vector z = Vector::Zero(1);
  const double direct = oracle::plda_llr(m.mean, m.between_cov, m.within_cov, z, z);
  CHECK(std::abs(direct - 0.5 * std::log(4.0 / 3.0)) < 1e-12);
  CHECK(std::abs(plda_llr(m, z, z) - direct) < 1e-10);
}

TEST_CASE("closed-form LLR matches direct density evaluation") {
  std::mt19937_64 rng(4);
  for (int d : {1, 2, 5, 8}) {
    const PldaModel m = random_model(rng, d);
    const PldaScorer scorer(m);
    for (int k = 0; k < 20; ++k) {
      const Vector e = oracle::random_matrix(rng, d, 1, 2.0), t = oracle::random_matrix(rng, d, 1, 2.0);
      const double direct = oracle::plda_llr(m.mean, m.between_cov, m.within_cov, e, t);
      CHECK(std::abs(scorer.llr(e, t) - direct) < 1e-8);
      // Exact symmetry.
      CHECK(scorer.llr(e, t) == scorer.llr(t, e));
      // Shifting e, t and the mean together changes nothing.
      const Vector c = oracle::random_matrix(rng, d, 1, 3.0);
      PldaModel shifted = m;
      shifted.mean += c;
      CHECK(std::abs(plda_llr(shifted, e + c, t + c) - scorer.llr(e, t)) < 1e-9);
    }
  }
}

TEST_CASE("zero between-speaker covariance gives zero LLR") {
  std::mt19937_64 rng(9);
  PldaModel m = random_model(rng, 3);
  m.between_cov.setZero();
  for (int k = 0; k < 10; ++k)
    CHECK(std::abs(plda_llr(m, oracle::random_matrix(rng, 3, 1), oracle::random_matrix(rng, 3, 1))) < 1e-12);
}

TEST_CASE("EM recovers the generating covariances") {
  const EmbeddingSet s = synth(4, 500, 10, Matrix::Identity(4, 4), Matrix::Identity(4, 4), 77);
  const PldaTrainResult r = train_plda(s, 20);
  REQUIRE(r.log_likelihoods.size() == 21);
  const Matrix eye = Matrix::Identity(4, 4);
  CHECK((r.model.between_cov - eye).norm() / eye.norm() < 0.15);
  CHECK((r.model.within_cov - eye).norm() / eye.norm() < 0.15);
  for (std::size_t i = 1; i < r.log_likelihoods.size(); ++i)
    CHECK(r.log_likelihoods[i] >= r.log_likelihoods[i - 1] - 1e-8);
  CHECK(r.log_likelihoods.back() == doctest::Approx(plda_log_likelihood(r.model, s)).epsilon(1e-12));
}

TEST_CASE("log-likelihood matches the stacked Gaussian density per speaker") {
  std::mt19937_64 rng(2);
  const PldaModel m = random_model(rng, 2);
  const EmbeddingSet s = synth(2, 4, 3, Matrix::Identity(2, 2), Matrix::Identity(2, 2), 3);
  double direct = 0;
  for (const auto& [spk, idx] : group_by_speaker(s, "test")) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    Matrix k(2 * n, 2 * n);
    Vector x(2 * n), mu(2 * n);
    for (Eigen::Index a = 0; a < n; ++a) {
      x.segment(2 * a, 2) = s[idx[a]].vector;
      mu.segment(2 * a, 2) = m.mean;
      for (Eigen::Index b = 0; b < n; ++b)
        k.block(2 * a, 2 * b, 2, 2) = m.between_cov + (a == b ? m.within_cov : Matrix::Zero(2, 2));
    }
    direct += oracle::gaussian_logpdf(x, mu, k);
  }
  CHECK(plda_log_likelihood(m, s) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("EM is monotone from one to two iterations") {
  std::mt19937_64 rng(5);
  const EmbeddingSet s = synth(3, 20, 4, oracle::random_spd(rng, 3), oracle::random_spd(rng, 3), 5);
  const auto one = train_plda(s, 1).log_likelihoods;
  const auto two = train_plda(s, 2).log_likelihoods;
  CHECK(two[2] >= one[1] - 1e-8);
}

TEST_CASE("singleton speakers still train with non-decreasing likelihood") {
  const EmbeddingSet s = synth(3, 200, 1, Matrix::Identity(3, 3), Matrix::Identity(3, 3), 8);
  const PldaTrainResult r = train_plda(s, 10);
  for (std::size_t i = 1; i < r.log_likelihoods.size(); ++i)
    CHECK(r.log_likelihoods[i] >= r.log_likelihoods[i - 1] - 1e-8);
  CHECK_NOTHROW(r.model.validate());
}

TEST_CASE("target trials outscore nontarget trials on average") {
  const EmbeddingSet s = length_normalize(synth(6, 200, 6, Matrix::Identity(6, 6), 0.5 * Matrix::Identity(6, 6), 12));
  const PldaModel m = train_plda(s, 10).model;
  const TrialList trials = make_trials(s, 1000, 1000, 3);
  double tar = 0, non = 0;
  for (const Trial& t : trials) {
    const double v = plda_llr(m, s.at(t.enroll_id).vector, s.at(t.test_id).vector);
    (t.label == TrialLabel::kTarget ? tar : non) += v;
  }
  CHECK(tar / 1000 > non / 1000);
}

TEST_CASE("train_plda argument errors") {
  const EmbeddingSet one = synth(2, 1, 5, Matrix::Identity(2, 2), Matrix::Identity(2, 2), 1);
  CHECK_THROWS_AS(train_plda(one, 5), Error);
  const EmbeddingSet two = synth(2, 2, 5, Matrix::Identity(2, 2), Matrix::Identity(2, 2), 1);
  CHECK_THROWS_AS(train_plda(two, 0), Error);
}

TEST_CASE("enrollment averaging") {
  PldaModel m{Vector::Zero(2), Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  Vector v(2);
  v << 3, 4;
  std::vector<Vector> one{v};
  CHECK((enroll_average(m, one) - v / 5.0).norm() < 1e-15);
  std::vector<Vector> copies{v, v, v};
  CHECK((enroll_average(m, copies) - v / 5.0).norm() < 1e-15);
  std::vector<Vector> opposite{v, -v};
  CHECK_THROWS_AS(enroll_average(m, opposite), Error);
  CHECK_THROWS_AS(enroll_average(m, std::vector<Vector>{}), Error);
}

TEST_CASE("model serialization round trips exactly") {
  std::mt19937_64 rng(3);
  const PldaModel m = random_model(rng, 4);
  const PldaModel back = parse_plda(serialize_plda(m));
  CHECK(back.mean == m.mean);
  CHECK(back.between_cov == m.between_cov);
  CHECK(back.within_cov == m.within_cov);
  CHECK(serialize_plda(m).substr(0, 4) == "PLDA");
}
