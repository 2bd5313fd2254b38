// src/encoders.cc

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

#include "embedspace/encoders.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "embedspace/error.h"
#include "embedspace/synth.h"

namespace embedspace {

FeatureMaps::FeatureMaps(std::size_t channels, std::size_t height, std::size_t width)
    : FeatureMaps(channels, height, width, std::vector<double>(channels * height * width, 0.0)) {}

FeatureMaps::FeatureMaps(std::size_t channels, std::size_t height, std::size_t width,
                         std::vector<double> values)
    : c_(channels), h_(height), w_(width), data_(std::move(values)) {
  require(c_ >= 1 && h_ >= 1 && w_ >= 1, ErrorCode::kDimension, "feature maps need C, H, W >= 1");
  require(data_.size() == c_ * h_ * w_, ErrorCode::kDimension,
          "feature map value count does not match C x H x W");
  for (double v : data_) require(std::isfinite(v), ErrorCode::kNumeric, "non-finite feature map value");
}

Vector gap_mean(const FeatureMaps& maps) {
  const std::size_t area = maps.height() * maps.width();
  Vector v(static_cast<Eigen::Index>(maps.channels()));
  for (std::size_t c = 0; c < maps.channels(); ++c) {
    double sum = 0.0;
    for (std::size_t k = 0; k < area; ++k) sum += maps.values()[c * area + k];
    v(c) = sum / static_cast<double>(area);
  }
  return v;
}

Vector gap_mean_std(const FeatureMaps& maps) {
  const std::size_t area = maps.height() * maps.width();
  const auto channels = static_cast<Eigen::Index>(maps.channels());
  const Vector mean = gap_mean(maps);
  Vector out(2 * channels);
  out.head(channels) = mean;
  for (Eigen::Index c = 0; c < channels; ++c) {
    double sq = 0.0;
    for (std::size_t k = 0; k < area; ++k) {
      const double r = maps.values()[static_cast<std::size_t>(c) * area + k] - mean(c);
      sq += r * r;
    }
    out(channels + c) = std::sqrt(std::max(sq / static_cast<double>(area), kStdFloor));
  }
  return out;
}

void LdeParams::validate(std::size_t frame_dim) const {
  require(centers.rows() >= 1, ErrorCode::kDimension, "LDE needs at least one component");
  require(static_cast<std::size_t>(centers.cols()) == frame_dim, ErrorCode::kDimension,
          "LDE center dimension does not match frames");
  require(scales.size() == centers.rows(), ErrorCode::kDimension,
          "LDE needs one scale per component");
  require((scales.array() >= 0.0).all(), ErrorCode::kInvalidArgument, "LDE scales must be >= 0");
}

namespace {

// Assignment weights L x K.
Matrix lde_weights(const Matrix& frames, const LdeParams& p, Matrix* sq_dist) {
  const Eigen::Index l = frames.rows(), k = p.centers.rows();
  Matrix d(l, k), w(l, k);
  for (Eigen::Index i = 0; i < l; ++i)
    for (Eigen::Index c = 0; c < k; ++c) d(i, c) = (frames.row(i) - p.centers.row(c)).squaredNorm();
  for (Eigen::Index i = 0; i < l; ++i) {
    Eigen::RowVectorXd a = -(d.row(i).array() * p.scales.transpose().array()).matrix();
    const double top = a.maxCoeff();
    Eigen::RowVectorXd e = (a.array() - top).exp().matrix();
    w.row(i) = e / e.sum();
  }
  if (sq_dist != nullptr) *sq_dist = std::move(d);
  return w;
}

}  // namespace

Matrix lde_forward(const Matrix& frames, const LdeParams& params) {
  require(frames.rows() >= 1, ErrorCode::kDimension, "LDE needs at least one frame");
  params.validate(static_cast<std::size_t>(frames.cols()));
  const Matrix w = lde_weights(frames, params, nullptr);
  const Eigen::Index k = params.centers.rows();
  Matrix out(k, frames.cols());
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(frames.cols());
    double mass = 0.0;
    for (Eigen::Index i = 0; i < frames.rows(); ++i) {
      acc += w(i, c) * (frames.row(i) - params.centers.row(c));
      mass += w(i, c);
    }
    out.row(c) = acc / (mass + kLdeEpsilon);
  }
  return out;
}

LdeGradients lde_backward(const Matrix& frames, const LdeParams& params, const Matrix& upstream) {
  require(frames.rows() >= 1, ErrorCode::kDimension, "LDE needs at least one frame");
  params.validate(static_cast<std::size_t>(frames.cols()));
  const Eigen::Index l = frames.rows(), k = params.centers.rows(), d = frames.cols();
  require(upstream.rows() == k && upstream.cols() == d, ErrorCode::kDimension,
          "LDE upstream gradient must be K x D");
  Matrix sq_dist;
  const Matrix w = lde_weights(frames, params, &sq_dist);
  const Matrix enc = lde_forward(frames, params);
  Vector mass(k);
  for (Eigen::Index c = 0; c < k; ++c) mass(c) = w.col(c).sum() + kLdeEpsilon;

  LdeGradients g{Matrix::Zero(l, d), Matrix::Zero(k, d), Vector::Zero(k)};
  for (Eigen::Index i = 0; i < l; ++i) {
    // Through the weights: de_c/dw_ic = (r_ic - e_c) / mass_c.
    Eigen::RowVectorXd grad_w(k);
    for (Eigen::Index c = 0; c < k; ++c)
      grad_w(c) = upstream.row(c).dot(frames.row(i) - params.centers.row(c) - enc.row(c)) / mass(c);
    // Softmax Jacobian.
    const double mixed = w.row(i).dot(grad_w);
    for (Eigen::Index c = 0; c < k; ++c) {
      const Eigen::RowVectorXd r = frames.row(i) - params.centers.row(c);
      const double grad_logit = w(i, c) * (grad_w(c) - mixed);
      g.scales(c) -= grad_logit * sq_dist(i, c);
      // logit = -s |r|^2, plus the direct path of r into the weighted sum.
      const Eigen::RowVectorXd grad_r =
          -2.0 * params.scales(c) * grad_logit * r + w(i, c) / mass(c) * upstream.row(c);
      g.frames.row(i) += grad_r;
      g.centers.row(c) -= grad_r;
    }
  }
  return g;
}

double angular_margin_psi(double cos_theta, int margin) {
  const double c = std::clamp(cos_theta, -1.0 + 1e-12, 1.0 - 1e-12);
  const double theta = std::acos(c);
  const double k = std::floor(margin * theta / std::numbers::pi);
  const double sign = std::fmod(k, 2.0) == 0.0 ? 1.0 : -1.0;
  return sign * std::cos(margin * theta) - 2.0 * k;
}

namespace {

// d psi / d cos(theta) = (-1)^k m sin(m theta) / sin(theta).
double angular_margin_dpsi(double cos_theta, int margin) {
  const double c = std::clamp(cos_theta, -1.0 + 1e-12, 1.0 - 1e-12);
  const double theta = std::acos(c);
  const double k = std::floor(margin * theta / std::numbers::pi);
  const double sign = std::fmod(k, 2.0) == 0.0 ? 1.0 : -1.0;
  return sign * margin * std::sin(margin * theta) / std::sin(theta);
}

}  // namespace

AsoftmaxResult asoftmax_loss(const Vector& input, std::size_t label, const AsoftmaxParams& params) {
  require(params.margin >= 1, ErrorCode::kInvalidArgument, "A-softmax margin must be >= 1");
  require(params.lambda >= 0.0, ErrorCode::kInvalidArgument, "A-softmax lambda must be >= 0");
  require(params.weights.cols() == input.size(), ErrorCode::kDimension,
          "A-softmax weight dimension does not match the input");
  require(label < static_cast<std::size_t>(params.weights.rows()), ErrorCode::kInvalidArgument,
          "A-softmax label out of range");
  const double norm = input.norm();
  require(norm > 0.0, ErrorCode::kNumeric, "A-softmax input is the zero vector");
  const auto y = static_cast<Eigen::Index>(label);
  const Vector unit = input / norm;
  const Vector cosines = params.weights * unit;
  const double lam = params.lambda;
  const double psi = (lam * cosines(y) + angular_margin_psi(cosines(y), params.margin)) / (1.0 + lam);
  const double dpsi = (lam + angular_margin_dpsi(cosines(y), params.margin)) / (1.0 + lam);

  Vector logits = norm * cosines;
  logits(y) = norm * psi;
  const double top = logits.maxCoeff();
  const Vector expd = (logits.array() - top).exp().matrix();
  const double partition = expd.sum();
  const Vector prob = expd / partition;

  AsoftmaxResult r;
  r.loss = top + std::log(partition) - logits(y);
  Vector grad_logit = prob;
  grad_logit(y) -= 1.0;
  r.grad_weights = grad_logit * input.transpose();
  r.grad_weights.row(y) *= dpsi;
  // d(|x| cos_j)/dx = w_j; d(|x| psi)/dx = psi u + dpsi (w_y - cos_y u).
  r.grad_input = params.weights.transpose() * grad_logit;
  r.grad_input -= grad_logit(y) * params.weights.row(y).transpose();
  r.grad_input += grad_logit(y) * (psi * unit + dpsi * (params.weights.row(y).transpose() - cosines(y) * unit));
  return r;
}

double anneal_lambda(std::int64_t step, const AnnealSchedule& s) {
  require(step >= 0, ErrorCode::kInvalidArgument, "anneal step must be >= 0");
  require(s.lambda_base >= 0.0 && s.gamma >= 0.0 && s.lambda_min >= 0.0,
          ErrorCode::kInvalidArgument, "anneal parameters must be >= 0");
  return std::max(s.lambda_min, s.lambda_base / (1.0 + s.gamma * static_cast<double>(step)));
}

namespace {

constexpr double kStep = 1e-5;

double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / (std::max(std::abs(analytic), std::abs(numeric)) + 1e-8);
}

Matrix random_matrix(GaussianStream& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.next();
  return m;
}

// Max relative error over every entry of `param`, perturbing it in place.
template <class Loss>
double check_entries(Eigen::Ref<Matrix> param, const Matrix& analytic, Loss&& loss) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < param.rows(); ++i)
    for (Eigen::Index j = 0; j < param.cols(); ++j) {
      const double saved = param(i, j);
      param(i, j) = saved + kStep;
      const double up = loss();
      param(i, j) = saved - kStep;
      const double down = loss();
      param(i, j) = saved;
      worst = std::max(worst, rel_error(analytic(i, j), (up - down) / (2.0 * kStep)));
    }
  return worst;
}

}  // namespace

GradientCheckReport run_gradient_check(std::size_t seeds, std::uint64_t base_seed) {
  GradientCheckReport report;
  report.seeds = seeds;
  for (std::size_t s = 0; s < seeds; ++s) {
    GaussianStream rng(base_seed, s);
    {
      Matrix frames = random_matrix(rng, 7, 4, 1.0);
      LdeParams p{random_matrix(rng, 3, 4, 1.0), Vector(3)};
      for (Eigen::Index c = 0; c < 3; ++c) p.scales(c) = 0.2 + rng.uniform();
      const Matrix up = random_matrix(rng, 3, 4, 1.0);
      const LdeGradients g = lde_backward(frames, p, up);
      auto loss = [&] { return (lde_forward(frames, p).array() * up.array()).sum(); };
      Matrix scales = p.scales;
      double worst = std::max(check_entries(frames, g.frames, loss), check_entries(p.centers, g.centers, loss));
      auto scale_loss = [&] {
        p.scales = scales;
        return loss();
      };
      worst = std::max(worst, check_entries(scales, Matrix(g.scales), scale_loss));
      report.lde_max_rel_error = std::max(report.lde_max_rel_error, worst);
    }
    {
      Vector x = random_matrix(rng, 6, 1, 1.0);
      AsoftmaxParams p{random_matrix(rng, 4, 6, 1.0), 4, 5.0};
      p.weights.rowwise().normalize();
      const std::size_t label = rng.below(4);
      const AsoftmaxResult r = asoftmax_loss(x, label, p);
      auto loss = [&] { return asoftmax_loss(x, label, p).loss; };
      Matrix xm = x;
      auto input_loss = [&] {
        x = xm;
        return loss();
      };
      const double worst = std::max(check_entries(xm, Matrix(r.grad_input), input_loss),
                                    check_entries(p.weights, r.grad_weights, loss));
      report.asoftmax_max_rel_error = std::max(report.asoftmax_max_rel_error, worst);

      AsoftmaxParams plain = p;
      plain.margin = 1;
      plain.lambda = 0.0;
      const Vector logits = p.weights * x;
      const double top = logits.maxCoeff();
      const double reference =
          top + std::log((logits.array() - top).exp().sum()) - logits(static_cast<Eigen::Index>(label));
      report.margin_free_max_abs_diff = std::max(
          report.margin_free_max_abs_diff, std::abs(asoftmax_loss(x, label, plain).loss - reference));
    }
  }
  return report;
}

}  // namespace embedspace
