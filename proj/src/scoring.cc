// src/scoring.cc

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

#include "embedspace/scoring.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string_view>
#include <unordered_map>

#include "embedspace/error.h"
#include "embedspace/parallel.h"

namespace embedspace {

double cosine_similarity(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), ErrorCode::kDimension, "cosine: dimension mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  require(na > 0.0 && nb > 0.0, ErrorCode::kNumeric, "cosine: zero vector");
  return a.dot(b) / (na * nb);
}

Scorer Scorer::cosine() { return Scorer("cosine", cosine_similarity); }

Scorer Scorer::plda(PldaModel model) {
  auto scorer = std::make_shared<const PldaScorer>(std::move(model));
  return Scorer("plda", [scorer](const Vector& e, const Vector& t) { return scorer->llr(e, t); });
}

Scorer Scorer::custom(std::string name, Fn fn) { return Scorer(std::move(name), std::move(fn)); }

ScoreSet score_trials(const TrialList& trials, const EmbeddingSet& enroll,
                      const EmbeddingSet& test, const Scorer& scorer) {
  std::vector<const Embedding*> e(trials.size()), t(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    e[i] = enroll.find(trials[i].enroll_id);
    t[i] = test.find(trials[i].test_id);
    if (e[i] == nullptr)
      fail(ErrorCode::kLookup, "trial " + std::to_string(i + 1) + ": enrollment id '" +
                                   trials[i].enroll_id + "' not found");
    if (t[i] == nullptr)
      fail(ErrorCode::kLookup, "trial " + std::to_string(i + 1) + ": test id '" +
                                   trials[i].test_id + "' not found");
  }
  ScoreSet out{trials, std::vector<double>(trials.size())};
  parallel_for(trials.size(), [&](std::size_t i) {
    out.scores[i] = scorer(e[i]->vector, t[i]->vector);
  });
  out.validate();
  return out;
}

AsNormConfig AsNormConfig::defaults(AsNormVariant variant) {
  return {variant, variant == AsNormVariant::kAsNorm1 ? std::size_t{100} : std::size_t{200}};
}

namespace {

struct Moments {
  double mean;
  double stddev;
};

Moments moments_of(const std::vector<double>& scores, const std::vector<std::size_t>& members) {
  const double k = static_cast<double>(members.size());
  double sum = 0.0;
  for (std::size_t c : members) sum += scores[c];
  const double mean = sum / k;
  double sq = 0.0;
  for (std::size_t c : members) sq += (scores[c] - mean) * (scores[c] - mean);
  return {mean, std::sqrt(sq / k)};
}

}  // namespace

ScoreSet asnorm(const ScoreSet& raw, const EmbeddingSet& enroll, const EmbeddingSet& test,
                const Cohort& cohort, const AsNormConfig& cfg, const Scorer& scorer) {
  raw.validate();
  const EmbeddingSet& members = cohort.embeddings;
  const std::size_t n_cohort = members.size();
  require(n_cohort >= 2, ErrorCode::kInvalidArgument, "AS-Norm cohort needs at least 2 members");
  require(cfg.top_k >= 2 && cfg.top_k <= n_cohort, ErrorCode::kInvalidArgument,
          "AS-Norm top_k must lie in [2, cohort size] (top_k=" + std::to_string(cfg.top_k) +
              ", cohort=" + std::to_string(n_cohort) + ")");

  // Cohort positions sorted by utt_id; stable sorting by score keeps ties in
  // this order.
  std::vector<std::size_t> by_id(n_cohort);
  std::iota(by_id.begin(), by_id.end(), 0);
  std::sort(by_id.begin(), by_id.end(),
            [&](std::size_t a, std::size_t b) { return members[a].utt_id < members[b].utt_id; });

  // One cohort score vector and ranking per distinct segment, keyed by
  // (side, utt_id).
  struct Segment {
    const Embedding* embedding;
    std::vector<double> scores;
    std::vector<std::size_t> ranked;
  };
  std::vector<Segment> segments;
  std::unordered_map<std::string, std::size_t> enroll_slot, test_slot;
  std::vector<std::pair<std::size_t, std::size_t>> trial_slots(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const Trial& tr = raw.trials[i];
    auto slot = [&](std::unordered_map<std::string, std::size_t>& map, const EmbeddingSet& set,
                    const std::string& id, const char* side) {
      auto it = map.find(id);
      if (it != map.end()) return it->second;
      const Embedding* e = set.find(id);
      if (e == nullptr)
        fail(ErrorCode::kLookup, "trial " + std::to_string(i + 1) + ": " + side + " id '" + id +
                                     "' not found");
      segments.push_back({e, {}, {}});
      map.emplace(id, segments.size() - 1);
      return segments.size() - 1;
    };
    trial_slots[i] = {slot(enroll_slot, enroll, tr.enroll_id, "enrollment"),
                      slot(test_slot, test, tr.test_id, "test")};
  }

  parallel_for(segments.size(), [&](std::size_t k) {
    Segment& seg = segments[k];
    seg.scores.resize(n_cohort);
    for (std::size_t c = 0; c < n_cohort; ++c)
      seg.scores[c] = scorer(seg.embedding->vector, members[c].vector);
    seg.ranked = by_id;
    std::stable_sort(seg.ranked.begin(), seg.ranked.end(), [&](std::size_t a, std::size_t b) {
      return seg.scores[a] > seg.scores[b];
    });
    seg.ranked.resize(cfg.top_k);
  });

  ScoreSet out{raw.trials, std::vector<double>(raw.size())};
  parallel_for(raw.size(), [&](std::size_t i) {
    const Segment& e = segments[trial_slots[i].first];
    const Segment& t = segments[trial_slots[i].second];
    const bool cross = cfg.variant == AsNormVariant::kAsNorm2;
    const Moments me = moments_of(e.scores, cross ? t.ranked : e.ranked);
    const Moments mt = moments_of(t.scores, cross ? e.ranked : t.ranked);
    auto check = [&](const Moments& m, const char* side) {
      if (!(m.stddev > 1e-12 * std::max(1.0, std::abs(m.mean))))
        fail(ErrorCode::kNumeric, "AS-Norm: zero cohort score variance for trial " +
                                      std::to_string(i + 1) + " (" + raw.trials[i].enroll_id +
                                      ", " + raw.trials[i].test_id + "), " + side + " side");
    };
    check(me, "enrollment");
    check(mt, "test");
    const double s = raw.scores[i];
    out.scores[i] = 0.5 * ((s - me.mean) / me.stddev + (s - mt.mean) / mt.stddev);
  });
  return out;
}

}  // namespace embedspace
