// include/embedspace/calibration.h

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

#ifndef EMBEDSPACE_CALIBRATION_H_
#define EMBEDSPACE_CALIBRATION_H_

#include <span>
#include <string>
#include <string_view>

#include "embedspace/data_model.h"

namespace embedspace {

/// Affine score-to-LLR map: calibrated = scale * raw + bias.
struct Calibration {
  double scale = 1.0;
  double bias = 0.0;
  double effective_prior = 0.01;
};

struct CalibrationOptions {
  double effective_prior = 0.01;
  double init_scale = 1.0;
  double init_bias = 0.0;
  /// Penalty ridge * scale^2, bounds the scale on separable data.
  double ridge = 1e-6;
  double gradient_tolerance = 1e-8;
  int max_iterations = 1000;
};

/// Prior-weighted cross-entropy
///   pi/N_t sum_tgt log(1 + e^-(a s + b + L)) + (1-pi)/N_n sum_non log(1 + e^(a s + b + L))
/// plus ridge * a^2, with L = logit(pi). Exposed for tests and diagnostics.
double calibration_objective(const ScoreSet& scores, double scale, double bias,
                             const CalibrationOptions& options);

/// Damped Newton on the convex objective above until the gradient infinity
/// norm drops below the tolerance. Needs at least one target and one
/// nontarget trial.
Calibration fit_calibration(const ScoreSet& scores, const CalibrationOptions& options);
Calibration fit_calibration(const ScoreSet& scores, double effective_prior = 0.01);

ScoreSet apply_calibration(const ScoreSet& scores, const Calibration& cal);

/// Equal-weight sum of already-calibrated systems. Systems after the first
/// are aligned to the first system's trial order by (enroll, test) id.
ScoreSet fuse(std::span<const ScoreSet> calibrated);

// Text form: `a=<v> b=<v> prior=<v>`.
std::string serialize_calibration(const Calibration& cal);
Calibration parse_calibration(std::string_view text);

}  // namespace embedspace

#endif  // EMBEDSPACE_CALIBRATION_H_
