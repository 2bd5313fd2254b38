// include/embedspace/encoders.h

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

#ifndef EMBEDSPACE_ENCODERS_H_
#define EMBEDSPACE_ENCODERS_H_

#include <cstdint>
#include <vector>

#include "embedspace/data_model.h"

namespace embedspace {

/// Feature maps of shape C x H x W, stored channel-major.
class FeatureMaps {
 public:
  FeatureMaps(std::size_t channels, std::size_t height, std::size_t width);
  FeatureMaps(std::size_t channels, std::size_t height, std::size_t width,
              std::vector<double> values);

  std::size_t channels() const { return c_; }
  std::size_t height() const { return h_; }
  std::size_t width() const { return w_; }
  double& at(std::size_t c, std::size_t h, std::size_t w) { return data_[(c * h_ + h) * w_ + w]; }
  double at(std::size_t c, std::size_t h, std::size_t w) const { return data_[(c * h_ + h) * w_ + w]; }
  const std::vector<double>& values() const { return data_; }

 private:
  std::size_t c_, h_, w_;
  std::vector<double> data_;
};

/// Per-channel spatial mean, v_i = sum_jk F_ijk / (H W).
Vector gap_mean(const FeatureMaps& maps);

inline constexpr double kStdFloor = 1e-10;

/// [means; stds], biased variance floored at kStdFloor before the root.
Vector gap_mean_std(const FeatureMaps& maps);

/// Learnable dictionary: centers K x D, nonnegative scales K.
struct LdeParams {
  Matrix centers;
  Vector scales;

  std::size_t components() const { return static_cast<std::size_t>(centers.rows()); }
  void validate(std::size_t frame_dim) const;
};

inline constexpr double kLdeEpsilon = 1e-8;

/// Frames L x D in, K x D encoding out: row c is
///   e_c = sum_l w_lc (x_l - mu_c) / (sum_l w_lc + eps),
/// with w_l. = softmax over c of -s_c |x_l - mu_c|^2.
Matrix lde_forward(const Matrix& frames, const LdeParams& params);

struct LdeGradients {
  Matrix frames;   // L x D
  Matrix centers;  // K x D
  Vector scales;   // K
};

/// Gradient of <upstream, lde_forward(frames, params)>.
LdeGradients lde_backward(const Matrix& frames, const LdeParams& params, const Matrix& upstream);

/// Class weights (rows expected unit-norm), integer margin m, annealing
/// weight lambda.
struct AsoftmaxParams {
  Matrix weights;
  int margin = 4;
  double lambda = 0.0;
};

struct AsoftmaxResult {
  double loss = 0.0;
  Vector grad_input;    // D
  Matrix grad_weights;  // classes x D
};

/// psi(theta) = (-1)^k cos(m theta) - 2k for theta in [k pi/m, (k+1) pi/m].
double angular_margin_psi(double cos_theta, int margin);

/// Cross-entropy with logits |x| cos(theta_j) for j != label and
/// |x| (lambda cos(theta_y) + psi(theta_y)) / (1 + lambda) for the label.
/// cos(theta_j) = w_j . x / |x| uses the weights as given; the returned
/// weight gradient is the unconstrained partial derivative.
AsoftmaxResult asoftmax_loss(const Vector& input, std::size_t label, const AsoftmaxParams& params);

struct AnnealSchedule {
  double lambda_base = 1000.0;
  double gamma = 0.1;
  double lambda_min = 5.0;
};

/// lambda(step) = max(lambda_min, lambda_base / (1 + gamma step)).
double anneal_lambda(std::int64_t step, const AnnealSchedule& schedule = {});

struct GradientCheckReport {
  std::size_t seeds = 0;
  double lde_max_rel_error = 0.0;
  double asoftmax_max_rel_error = 0.0;
  /// max |A-softmax(m=1) - normalized softmax| over the seeds.
  double margin_free_max_abs_diff = 0.0;
};

/// Central finite differences (h = 1e-5) against the analytic gradients of
/// lde_backward and asoftmax_loss on `seeds` random instances. Relative
/// error is |analytic - numeric| / (max(|analytic|, |numeric|) + 1e-8).
GradientCheckReport run_gradient_check(std::size_t seeds, std::uint64_t base_seed = 1);

}  // namespace embedspace

#endif  // EMBEDSPACE_ENCODERS_H_
