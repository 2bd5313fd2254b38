// include/embedspace/scoring.h

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

#ifndef EMBEDSPACE_SCORING_H_
#define EMBEDSPACE_SCORING_H_

#include <functional>
#include <memory>
#include <string>

#include "embedspace/data_model.h"
#include "embedspace/plda.h"

namespace embedspace {

double cosine_similarity(const Vector& a, const Vector& b);

/// Pair scorer shared by trial scoring and cohort scoring.
class Scorer {
 public:
  using Fn = std::function<double(const Vector&, const Vector&)>;

  static Scorer cosine();
  static Scorer plda(PldaModel model);
  /// Arbitrary symmetric pair function (tests, experiments).
  static Scorer custom(std::string name, Fn fn);

  double operator()(const Vector& enroll, const Vector& test) const { return fn_(enroll, test); }
  const std::string& name() const { return name_; }

 private:
  Scorer(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
  std::string name_;
  Fn fn_;
};

/// Scores every trial, in trial order. Parallel over trials.
ScoreSet score_trials(const TrialList& trials, const EmbeddingSet& enroll,
                      const EmbeddingSet& test, const Scorer& scorer);

struct Cohort {
  EmbeddingSet embeddings;
  std::string label;
};

enum class AsNormVariant { kAsNorm1, kAsNorm2 };

struct AsNormConfig {
  AsNormVariant variant = AsNormVariant::kAsNorm1;
  std::size_t top_k = 100;

  /// 100 cohort scores for AS-Norm1, 200 for AS-Norm2.
  static AsNormConfig defaults(AsNormVariant variant);
};

/// Adaptive symmetric normalization
///   s' = ((s - mu_e) / sigma_e + (s - mu_t) / sigma_t) / 2.
/// AS-Norm1 takes (mu_e, sigma_e) over the top_k highest scores of e against
/// the cohort, and (mu_t, sigma_t) likewise for t. AS-Norm2 takes
/// (mu_e, sigma_e) over the scores s(e, c) of the top_k members c ranked by
/// s(t, c), and symmetrically for t. Biased sigma; ranking ties go to the
/// lexicographically smaller cohort utt_id.
ScoreSet asnorm(const ScoreSet& raw, const EmbeddingSet& enroll, const EmbeddingSet& test,
                const Cohort& cohort, const AsNormConfig& cfg, const Scorer& scorer);

}  // namespace embedspace

#endif  // EMBEDSPACE_SCORING_H_
