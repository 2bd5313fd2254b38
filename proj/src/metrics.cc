// src/metrics.cc

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

#include "embedspace/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "embedspace/error.h"
#include "embedspace/io.h"

namespace embedspace {
namespace {

// Operating points of the ROC with tied scores grouped. Point 0 rejects
// everything; point k accepts the k highest distinct score groups.
struct Roc {
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;
  std::vector<std::size_t> misses;        // targets rejected
  std::vector<std::size_t> false_alarms;  // nontargets accepted
};

Roc build_roc(const ScoreSet& scores) {
  scores.validate();
  std::vector<std::pair<double, bool>> labeled;
  labeled.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const TrialLabel l = scores.trials[i].label;
    if (l == TrialLabel::kUnknown)
      fail(ErrorCode::kInvalidArgument,
           "metrics need labeled trials; trial " + std::to_string(i + 1) + " is unlabeled");
    labeled.emplace_back(scores.scores[i], l == TrialLabel::kTarget);
  }
  std::sort(labeled.begin(), labeled.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  Roc roc;
  for (const auto& [s, is_target] : labeled) (is_target ? roc.n_target : roc.n_nontarget)++;
  require(roc.n_target > 0 && roc.n_nontarget > 0, ErrorCode::kInvalidArgument,
          "metrics need at least one target and one nontarget trial");
  std::size_t miss = roc.n_target, fa = 0;
  roc.misses.push_back(miss);
  roc.false_alarms.push_back(fa);
  for (std::size_t i = 0; i < labeled.size();) {
    std::size_t j = i;
    while (j < labeled.size() && labeled[j].first == labeled[i].first) {
      if (labeled[j].second) --miss;
      else ++fa;
      ++j;
    }
    roc.misses.push_back(miss);
    roc.false_alarms.push_back(fa);
    i = j;
  }
  return roc;
}

}  // namespace

void CostParams::validate() const {
  require(c_miss > 0.0 && c_fa > 0.0, ErrorCode::kInvalidArgument, "costs must be positive");
  require(!p_targets.empty(), ErrorCode::kInvalidArgument, "need at least one target prior");
  for (double p : p_targets)
    require(p > 0.0 && p < 1.0, ErrorCode::kInvalidArgument, "target priors must lie in (0, 1)");
}

CostParams CostParams::cmn2() { return {1.0, 1.0, {0.01, 0.005}}; }

CostParams CostParams::vast() { return {1.0, 1.0, {0.05}}; }

CostParams CostParams::profile(std::string_view name) {
  if (name == "cmn2") return cmn2();
  if (name == "vast") return vast();
  fail(ErrorCode::kInvalidArgument, "unknown cost profile '" + std::string(name) + "'");
}

double normalized_cost(double p_miss, double p_fa, double p_target, const CostParams& params) {
  const double miss_weight = params.c_miss * p_target;
  const double fa_weight = params.c_fa * (1.0 - p_target);
  return (miss_weight * p_miss + fa_weight * p_fa) / std::min(miss_weight, fa_weight);
}

double compute_eer(const ScoreSet& scores) {
  const Roc roc = build_roc(scores);
  const double nt = static_cast<double>(roc.n_target);
  const double nn = static_cast<double>(roc.n_nontarget);
  for (std::size_t k = 1; k < roc.misses.size(); ++k) {
    // Compare exactly via cross-multiplied integer counts.
    if (roc.misses[k] * roc.n_nontarget <= roc.false_alarms[k] * roc.n_target) {
      const double m0 = static_cast<double>(roc.misses[k - 1]) / nt;
      const double f0 = static_cast<double>(roc.false_alarms[k - 1]) / nn;
      const double m1 = static_cast<double>(roc.misses[k]) / nt;
      const double f1 = static_cast<double>(roc.false_alarms[k]) / nn;
      const double gap0 = m0 - f0;  // > 0
      const double gap1 = m1 - f1;  // <= 0
      const double t = gap0 / (gap0 - gap1);
      return f0 + t * (f1 - f0);
    }
  }
  return 0.0;  // unreachable: the accept-all point has P_miss = 0
}

double compute_min_cost(const ScoreSet& scores, const CostParams& params) {
  params.validate();
  const Roc roc = build_roc(scores);
  double total = 0.0;
  for (double p : params.p_targets) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < roc.misses.size(); ++k) {
      const double c = normalized_cost(
          static_cast<double>(roc.misses[k]) / static_cast<double>(roc.n_target),
          static_cast<double>(roc.false_alarms[k]) / static_cast<double>(roc.n_nontarget), p,
          params);
      best = std::min(best, c);
    }
    total += best;
  }
  return total / static_cast<double>(params.p_targets.size());
}

double compute_act_cost(const ScoreSet& scores, const CostParams& params) {
  params.validate();
  build_roc(scores);  // label and class checks
  double total = 0.0;
  for (double p : params.p_targets) {
    const double threshold = std::log((params.c_fa * (1.0 - p)) / (params.c_miss * p));
    std::size_t n_t = 0, n_n = 0, miss = 0, fa = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool accept = scores.scores[i] >= threshold;
      if (scores.trials[i].label == TrialLabel::kTarget) {
        ++n_t;
        if (!accept) ++miss;
      } else {
        ++n_n;
        if (accept) ++fa;
      }
    }
    total += normalized_cost(static_cast<double>(miss) / static_cast<double>(n_t),
                             static_cast<double>(fa) / static_cast<double>(n_n), p, params);
  }
  return total / static_cast<double>(params.p_targets.size());
}

DetectionMetrics evaluate(const ScoreSet& scores, const CostParams& params) {
  return {compute_eer(scores), compute_min_cost(scores, params), compute_act_cost(scores, params)};
}

std::string format_metrics_line(const DetectionMetrics& m) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%05.2f / %.3f / %.3f", 100.0 * m.eer, m.min_cost, m.act_cost);
  return buf;
}

std::string format_metrics_tsv(const DetectionMetrics& m) {
  return "eer_percent\tmin_cost\tact_cost\n" + format_double(100.0 * m.eer) + "\t" +
         format_double(m.min_cost) + "\t" + format_double(m.act_cost) + "\n";
}

}  // namespace embedspace
