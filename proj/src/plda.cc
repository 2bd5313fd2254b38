// src/plda.cc

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

#include "embedspace/plda.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "byte_io.h"
#include "embedspace/error.h"
#include "embedspace/linalg.h"

namespace embedspace {
namespace {

constexpr double kWithinFloor = 1e-10;

struct SpeakerStats {
  std::size_t count = 0;
  Vector mean;
  Matrix scatter;  // sum of (x - mean)(x - mean)'
};

std::vector<SpeakerStats> speaker_stats(const EmbeddingSet& set) {
  std::vector<SpeakerStats> out;
  const auto d = static_cast<Eigen::Index>(set.dim());
  for (const auto& [spk, idx] : group_by_speaker(set, "PLDA")) {
    SpeakerStats s;
    s.count = idx.size();
    s.mean = Vector::Zero(d);
    for (std::size_t i : idx) s.mean += set[i].vector;
    s.mean /= static_cast<double>(s.count);
    s.scatter = Matrix::Zero(d, d);
    for (std::size_t i : idx) {
      Vector r = set[i].vector - s.mean;
      s.scatter.noalias() += r * r.transpose();
    }
    out.push_back(std::move(s));
  }
  return out;
}

double log_det_spd(const Eigen::LDLT<Matrix>& ldlt) {
  return ldlt.vectorD().array().log().sum();
}

Eigen::LDLT<Matrix> factor_spd(const Matrix& m, const char* what) {
  Eigen::LDLT<Matrix> ldlt(symmetrize(m));
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0))
    fail(ErrorCode::kNumeric, std::string(what) + " is not positive definite");
  return ldlt;
}

double stats_log_likelihood(const PldaModel& model, const std::vector<SpeakerStats>& stats) {
  const double d = static_cast<double>(model.dim());
  const Eigen::LDLT<Matrix> within = factor_spd(model.within_cov, "within covariance");
  const double log_det_w = log_det_spd(within);
  std::map<std::size_t, Eigen::LDLT<Matrix>> by_count;
  double total = 0.0;
  for (const SpeakerStats& s : stats) {
    auto it = by_count.find(s.count);
    if (it == by_count.end())
      it = by_count
               .emplace(s.count, factor_spd(model.within_cov + static_cast<double>(s.count) *
                                                                  model.between_cov,
                                            "speaker-mean covariance"))
               .first;
    const double n = static_cast<double>(s.count);
    const Vector z = s.mean - model.mean;
    const double within_term = within.solve(s.scatter).trace();
    const double mean_term = n * z.dot(it->second.solve(z));
    total += -0.5 * n * d * std::log(2.0 * std::numbers::pi) - 0.5 * (n - 1.0) * log_det_w -
             0.5 * log_det_spd(it->second) - 0.5 * within_term - 0.5 * mean_term;
  }
  return total;
}

void floor_model(PldaModel& m) {
  m.between_cov = floor_eigenvalues(m.between_cov, 0.0);
  const double top = symmetric_eigen(m.within_cov).values(0);
  m.within_cov = floor_eigenvalues(m.within_cov, kWithinFloor * std::max(top, 0.0) + 1e-300);
}

}  // namespace

void PldaModel::validate() const {
  const auto d = mean.size();
  require(d >= 1, ErrorCode::kDimension, "PLDA model has dimension 0");
  require(between_cov.rows() == d && between_cov.cols() == d && within_cov.rows() == d &&
              within_cov.cols() == d,
          ErrorCode::kDimension, "PLDA covariance shapes do not match the mean");
  require(mean.allFinite() && between_cov.allFinite() && within_cov.allFinite(),
          ErrorCode::kNumeric, "PLDA model has non-finite values");
  const double tol = 1e-9 * std::max(1.0, between_cov.cwiseAbs().maxCoeff());
  require(symmetric_eigen(between_cov).values.minCoeff() >= -tol, ErrorCode::kNumeric,
          "PLDA between covariance is not PSD");
  require(symmetric_eigen(within_cov).values.minCoeff() > 0.0, ErrorCode::kNumeric,
          "PLDA within covariance is not positive definite");
}

double plda_log_likelihood(const PldaModel& model, const EmbeddingSet& set) {
  require(set.dim() == model.dim(), ErrorCode::kDimension, "PLDA dimension mismatch");
  return stats_log_likelihood(model, speaker_stats(set));
}

PldaTrainResult train_plda(const EmbeddingSet& train, int n_iters, std::uint64_t /*init_seed*/) {
  require(n_iters >= 1, ErrorCode::kInvalidArgument, "PLDA needs n_iters >= 1");
  require(!train.empty(), ErrorCode::kInvalidArgument, "PLDA training set is empty");
  const std::vector<SpeakerStats> stats = speaker_stats(train);
  require(stats.size() >= 2, ErrorCode::kInvalidArgument, "PLDA needs at least 2 speakers");
  const auto d = static_cast<Eigen::Index>(train.dim());
  const double n_total = static_cast<double>(train.size());
  const double n_spk = static_cast<double>(stats.size());

  // Moment-matched start.
  PldaModel m;
  m.mean = set_mean(train);
  m.within_cov = Matrix::Zero(d, d);
  m.between_cov = Matrix::Zero(d, d);
  for (const SpeakerStats& s : stats) {
    m.within_cov += s.scatter;
    Vector dm = s.mean - m.mean;
    m.between_cov.noalias() += dm * dm.transpose();
  }
  m.within_cov /= n_total;
  m.between_cov /= n_spk;
  if (is_rank_deficient(m.within_cov)) {
    // Singleton speakers leave no within-class scatter; split the total.
    const Matrix total = set_covariance(train);
    m.within_cov = 0.5 * total;
    m.between_cov = 0.5 * total;
  }
  floor_model(m);

  PldaTrainResult result;
  result.log_likelihoods.push_back(stats_log_likelihood(m, stats));
  for (int it = 0; it < n_iters; ++it) {
    // E-step per utterance count: posterior of z_s = mean + y_s given the
    // speaker mean, through G_n = B + W/n so a singular B is allowed.
    std::map<std::size_t, std::pair<Matrix, Matrix>> gain_cov;  // K_n, V_n
    for (const SpeakerStats& s : stats) {
      if (gain_cov.count(s.count)) continue;
      const Matrix g = m.between_cov + m.within_cov / static_cast<double>(s.count);
      Eigen::LDLT<Matrix> ldlt = factor_spd(g, "posterior gain matrix");
      Matrix gain = ldlt.solve(m.between_cov).transpose();  // B G^{-1}
      Matrix post_cov = symmetrize(m.between_cov - gain * m.between_cov);
      gain_cov.emplace(s.count, std::make_pair(std::move(gain), std::move(post_cov)));
    }
    std::vector<Vector> post_mean(stats.size());
    Matrix post_cov_sum = Matrix::Zero(d, d);
    Matrix weighted_post_cov = Matrix::Zero(d, d);
    for (std::size_t k = 0; k < stats.size(); ++k) {
      const auto& [gain, post_cov] = gain_cov.at(stats[k].count);
      post_mean[k] = m.mean + gain * (stats[k].mean - m.mean);
      post_cov_sum += post_cov;
      weighted_post_cov += static_cast<double>(stats[k].count) * post_cov;
    }
    // M-step.
    PldaModel next;
    next.mean = Vector::Zero(d);
    for (const Vector& z : post_mean) next.mean += z;
    next.mean /= n_spk;
    next.between_cov = post_cov_sum;
    next.within_cov = weighted_post_cov;
    for (std::size_t k = 0; k < stats.size(); ++k) {
      Vector db = post_mean[k] - next.mean;
      next.between_cov.noalias() += db * db.transpose();
      Vector dw = stats[k].mean - post_mean[k];
      next.within_cov += stats[k].scatter;
      next.within_cov.noalias() += static_cast<double>(stats[k].count) * dw * dw.transpose();
    }
    next.between_cov = symmetrize(next.between_cov / n_spk);
    next.within_cov = symmetrize(next.within_cov / n_total);
    floor_model(next);
    m = std::move(next);
    result.log_likelihoods.push_back(stats_log_likelihood(m, stats));
  }
  result.model = std::move(m);
  return result;
}

PldaScorer::PldaScorer(PldaModel model) : model_(std::move(model)) {
  model_.validate();
  const Matrix& b = model_.between_cov;
  const Matrix total = b + model_.within_cov;
  const Eigen::LDLT<Matrix> total_f = factor_spd(total, "total covariance");
  const Matrix total_inv = total_f.solve(Matrix::Identity(total.rows(), total.cols()));
  // Schur complement of K_same: conditional covariance of t given e.
  const Matrix schur = symmetrize(total - b * total_inv * b);
  const Eigen::LDLT<Matrix> schur_f = factor_spd(schur, "conditional covariance");
  const Matrix schur_inv = schur_f.solve(Matrix::Identity(total.rows(), total.cols()));
  q_ = symmetrize(total_inv - schur_inv);
  p_ = symmetrize(total_inv * b * schur_inv);
  constant_ = 0.5 * (log_det_spd(total_f) - log_det_spd(schur_f));
}

double PldaScorer::llr(const Vector& enroll, const Vector& test) const {
  require(static_cast<std::size_t>(enroll.size()) == model_.dim() &&
              static_cast<std::size_t>(test.size()) == model_.dim(),
          ErrorCode::kDimension, "PLDA scoring dimension mismatch");
  require(enroll.allFinite() && test.allFinite(), ErrorCode::kNumeric,
          "PLDA scoring input is not finite");
  const Vector e = enroll - model_.mean;
  const Vector t = test - model_.mean;
  // e'Pt written through (e+t) and (e-t) so swapping e and t is exact.
  const Vector sum = e + t;
  const Vector diff = e - t;
  const double cross = 0.25 * (sum.dot(p_ * sum) - diff.dot(p_ * diff));
  return 0.5 * (e.dot(q_ * e) + t.dot(q_ * t)) + cross + constant_;
}

double plda_llr(const PldaModel& model, const Vector& enroll, const Vector& test) {
  return PldaScorer(model).llr(enroll, test);
}

Vector enroll_average(const PldaModel& model, std::span<const Vector> vectors) {
  require(!vectors.empty(), ErrorCode::kInvalidArgument, "enrollment needs at least one vector");
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(model.dim()));
  for (const Vector& v : vectors) {
    require(static_cast<std::size_t>(v.size()) == model.dim(), ErrorCode::kDimension,
            "enrollment vector dimension mismatch");
    sum += v;
  }
  Vector mean = sum / static_cast<double>(vectors.size());
  const double norm = mean.norm();
  require(norm > 1e-12 * std::max(1.0, sum.cwiseAbs().maxCoeff()), ErrorCode::kNumeric,
          "enrollment mean is the zero vector");
  return mean / norm;
}

std::string serialize_plda(const PldaModel& model) {
  internal::ByteWriter w;
  w.raw("PLDA");
  w.u32(static_cast<std::uint32_t>(model.dim()));
  w.vector(model.mean);
  w.matrix(model.between_cov);
  w.matrix(model.within_cov);
  return w.take();
}

PldaModel parse_plda(std::string_view bytes) {
  internal::ByteReader r(bytes, "PLDA file");
  r.expect_magic("PLDA");
  const std::uint32_t d = r.u32();
  PldaModel m;
  m.mean = r.vector(d);
  m.between_cov = r.matrix(d, d);
  m.within_cov = r.matrix(d, d);
  r.expect_end();
  m.validate();
  return m;
}

}  // namespace embedspace
