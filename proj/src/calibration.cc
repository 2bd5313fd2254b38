// src/calibration.cc

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

#include "embedspace/calibration.h"

#include <cmath>
#include <sstream>

#include "embedspace/error.h"
#include "embedspace/io.h"

namespace embedspace {
namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Split {
  std::vector<double> targets;
  std::vector<double> nontargets;
};

Split split_labeled(const ScoreSet& scores) {
  scores.validate();
  Split s;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    switch (scores.trials[i].label) {
      case TrialLabel::kTarget: s.targets.push_back(scores.scores[i]); break;
      case TrialLabel::kNontarget: s.nontargets.push_back(scores.scores[i]); break;
      case TrialLabel::kUnknown:
        fail(ErrorCode::kInvalidArgument,
             "calibration needs labeled trials; trial " + std::to_string(i + 1) + " is unlabeled");
    }
  }
  require(!s.targets.empty() && !s.nontargets.empty(), ErrorCode::kInvalidArgument,
          "calibration needs at least one target and one nontarget trial");
  return s;
}

struct Evaluation {
  double value = 0.0;
  Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
  Eigen::Matrix2d hessian = Eigen::Matrix2d::Zero();
};

Evaluation evaluate(const Split& s, double a, double b, const CalibrationOptions& o) {
  const double pi = o.effective_prior;
  const double offset = std::log(pi / (1.0 - pi));
  Evaluation ev;
  auto accumulate = [&](const std::vector<double>& xs, double weight, double sign) {
    // Term weight * softplus(sign * z), z = a x + b + offset.
    for (double x : xs) {
      const double z = a * x + b + offset;
      ev.value += weight * softplus(sign * z);
      const double p = sigmoid(sign * z);
      const double dz = weight * sign * p;
      const double d2z = weight * p * (1.0 - p);
      ev.gradient += dz * Eigen::Vector2d(x, 1.0);
      ev.hessian += d2z * Eigen::Vector2d(x, 1.0) * Eigen::RowVector2d(x, 1.0);
    }
  };
  accumulate(s.targets, pi / static_cast<double>(s.targets.size()), -1.0);
  accumulate(s.nontargets, (1.0 - pi) / static_cast<double>(s.nontargets.size()), 1.0);
  ev.value += o.ridge * a * a;
  ev.gradient(0) += 2.0 * o.ridge * a;
  ev.hessian(0, 0) += 2.0 * o.ridge;
  return ev;
}

void check_options(const CalibrationOptions& o) {
  require(o.effective_prior > 0.0 && o.effective_prior < 1.0, ErrorCode::kInvalidArgument,
          "effective prior must lie in (0, 1)");
  require(o.ridge > 0.0, ErrorCode::kInvalidArgument, "calibration ridge must be > 0");
}

}  // namespace

double calibration_objective(const ScoreSet& scores, double scale, double bias,
                             const CalibrationOptions& options) {
  check_options(options);
  return evaluate(split_labeled(scores), scale, bias, options).value;
}

Calibration fit_calibration(const ScoreSet& scores, const CalibrationOptions& options) {
  check_options(options);
  const Split s = split_labeled(scores);
  Eigen::Vector2d w(options.init_scale, options.init_bias);
  Evaluation ev = evaluate(s, w(0), w(1), options);
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (ev.gradient.cwiseAbs().maxCoeff() < options.gradient_tolerance) break;
    Eigen::Vector2d step = -ev.hessian.ldlt().solve(ev.gradient);
    if (!step.allFinite() || step.dot(ev.gradient) >= 0.0) step = -ev.gradient;
    double t = 1.0;
    Evaluation trial = evaluate(s, w(0) + step(0), w(1) + step(1), options);
    while (trial.value > ev.value + 1e-4 * t * step.dot(ev.gradient) && t > 1e-12) {
      t *= 0.5;
      trial = evaluate(s, w(0) + t * step(0), w(1) + t * step(1), options);
    }
    if (t <= 1e-12) break;  // no further decrease representable
    w += t * step;
    ev = trial;
  }
  require(w.allFinite(), ErrorCode::kNumeric, "calibration diverged");
  return {w(0), w(1), options.effective_prior};
}

Calibration fit_calibration(const ScoreSet& scores, double effective_prior) {
  CalibrationOptions o;
  o.effective_prior = effective_prior;
  return fit_calibration(scores, o);
}

ScoreSet apply_calibration(const ScoreSet& scores, const Calibration& cal) {
  require(std::isfinite(cal.scale) && std::isfinite(cal.bias), ErrorCode::kNumeric,
          "calibration parameters are not finite");
  ScoreSet out = scores;
  for (double& s : out.scores) s = cal.scale * s + cal.bias;
  out.validate();
  return out;
}

ScoreSet fuse(std::span<const ScoreSet> calibrated) {
  require(!calibrated.empty(), ErrorCode::kInvalidArgument, "fusion needs at least one system");
  ScoreSet out = calibrated.front();
  out.validate();
  for (std::size_t k = 1; k < calibrated.size(); ++k) {
    const ScoreSet& sys = calibrated[k];
    sys.validate();
    if (sys.size() != out.size())
      fail(ErrorCode::kDimension, "fusion: system " + std::to_string(k + 1) + " has " +
                                      std::to_string(sys.size()) + " trials, system 1 has " +
                                      std::to_string(out.size()));
    for (std::size_t i = 0; i < out.size(); ++i) {
      const Trial& tr = out.trials[i];
      std::size_t j = sys.trials.find(tr.enroll_id, tr.test_id);
      if (j == TrialList::npos)
        fail(ErrorCode::kLookup, "fusion: trial (" + tr.enroll_id + ", " + tr.test_id +
                                     ") missing from system " + std::to_string(k + 1));
      out.scores[i] += sys.scores[j];
    }
  }
  return out;
}

std::string serialize_calibration(const Calibration& cal) {
  return "a=" + format_double(cal.scale) + " b=" + format_double(cal.bias) +
         " prior=" + format_double(cal.effective_prior) + "\n";
}

Calibration parse_calibration(std::string_view text) {
  Calibration cal;
  bool seen_a = false, seen_b = false, seen_prior = false;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) {
    auto eq = tok.find('=');
    require(eq != std::string::npos, ErrorCode::kParse, "calibration: expected key=value, got '" + tok + "'");
    std::string key = tok.substr(0, eq);
    double v = parse_double(std::string_view(tok).substr(eq + 1), "calibration key '" + key + "'");
    if (key == "a") cal.scale = v, seen_a = true;
    else if (key == "b") cal.bias = v, seen_b = true;
    else if (key == "prior") cal.effective_prior = v, seen_prior = true;
    else fail(ErrorCode::kParse, "calibration: unknown key '" + key + "'");
  }
  require(seen_a && seen_b && seen_prior, ErrorCode::kParse, "calibration: need a=, b= and prior=");
  return cal;
}

}  // namespace embedspace
