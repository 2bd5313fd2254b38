// include/embedspace/metrics.h

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

#ifndef EMBEDSPACE_METRICS_H_
#define EMBEDSPACE_METRICS_H_

#include <string>
#include <string_view>
#include <vector>

#include "embedspace/data_model.h"

namespace embedspace {

/// Detection cost parameters; the reported cost is the mean of the
/// normalized costs over `p_targets`.
struct CostParams {
  double c_miss = 1.0;
  double c_fa = 1.0;
  std::vector<double> p_targets;

  void validate() const;

  /// Two-point average at P_target 0.01 and 0.005.
  static CostParams cmn2();
  /// Single point at P_target 0.05.
  static CostParams vast();
  /// "cmn2" or "vast".
  static CostParams profile(std::string_view name);
};

/// Trials are accepted iff score >= threshold. Every metric needs at least
/// one target and one nontarget and rejects unlabeled trials.
double compute_eer(const ScoreSet& scores);
double compute_min_cost(const ScoreSet& scores, const CostParams& params);
double compute_act_cost(const ScoreSet& scores, const CostParams& params);

/// Normalized cost at one operating point.
double normalized_cost(double p_miss, double p_fa, double p_target, const CostParams& params);

struct DetectionMetrics {
  double eer = 0.0;  // fraction, not percent
  double min_cost = 0.0;
  double act_cost = 0.0;
};

DetectionMetrics evaluate(const ScoreSet& scores, const CostParams& params);

/// `EER[%] / minC / actC`, e.g. "07.32 / 0.419 / 0.504".
std::string format_metrics_line(const DetectionMetrics& m);
/// Header line plus one tab-separated row with full-precision values.
std::string format_metrics_tsv(const DetectionMetrics& m);

}  // namespace embedspace

#endif  // EMBEDSPACE_METRICS_H_
