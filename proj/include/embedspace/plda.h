// include/embedspace/plda.h

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

#ifndef EMBEDSPACE_PLDA_H_
#define EMBEDSPACE_PLDA_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embedspace/data_model.h"

namespace embedspace {

/// Two-covariance PLDA: x = mean + y + e, y ~ N(0, between_cov),
/// e ~ N(0, within_cov).
struct PldaModel {
  Vector mean;
  Matrix between_cov;
  Matrix within_cov;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
  /// Throws unless shapes agree, values are finite, between_cov is PSD and
  /// within_cov is positive definite.
  void validate() const;
};

struct PldaTrainResult {
  PldaModel model;
  /// Marginal log-likelihood of the training set: entry 0 is the initial
  /// model, entry k the model after EM iteration k.
  std::vector<double> log_likelihoods;
};

/// EM on labeled (and, by convention, length-normalized) embeddings. The
/// initial model is moment-matched and does not depend on `init_seed`, which
/// is kept for interface stability. Every speaker contributes one factor; if
/// every speaker has a single utterance the two covariances are not
/// separately identifiable and only their sum is constrained by the data.
PldaTrainResult train_plda(const EmbeddingSet& train, int n_iters, std::uint64_t init_seed = 0);

/// Marginal log-likelihood of a labeled set under the model, speakers
/// independent, utterances of a speaker sharing one factor.
double plda_log_likelihood(const PldaModel& model, const EmbeddingSet& set);

/// Precomputed quadratic-form scorer:
/// llr = 1/2 e'Qe + 1/2 t'Qt + e'Pt + const on mean-removed vectors.
class PldaScorer {
 public:
  explicit PldaScorer(PldaModel model);

  /// Symmetric in its arguments bit for bit.
  double llr(const Vector& enroll, const Vector& test) const;
  const PldaModel& model() const { return model_; }

 private:
  PldaModel model_;
  Matrix q_;
  Matrix p_;
  double constant_ = 0.0;
};

/// log N([e;t]; [m;m], K_same) - log N([e;t]; [m;m], K_diff).
double plda_llr(const PldaModel& model, const Vector& enroll, const Vector& test);

/// Multi-segment enrollment: arithmetic mean, re-normalized to unit length.
Vector enroll_average(const PldaModel& model, std::span<const Vector> vectors);

// "PLDA" container: u32 D, mean, between_cov, within_cov as row-major f64.
std::string serialize_plda(const PldaModel& model);
PldaModel parse_plda(std::string_view bytes);

}  // namespace embedspace

#endif  // EMBEDSPACE_PLDA_H_
