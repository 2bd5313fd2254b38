// src/synth.cc

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

#include "embedspace/synth.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>
#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "embedspace/error.h"
#include "embedspace/io.h"
#include "embedspace/linalg.h"
#include "embedspace/parallel.h"

namespace embedspace {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<double> parse_list(std::string_view s, std::string_view key) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(',', start);
    if (end == std::string_view::npos) end = s.size();
    out.push_back(parse_double(trim(s.substr(start, end - start)), "synth config key '" + std::string(key) + "'"));
    start = end + 1;
  }
  return out;
}

long long parse_int(std::string_view s, std::string_view key) {
  double v = parse_double(s, "synth config key '" + std::string(key) + "'");
  if (v != std::floor(v) || std::abs(v) > 9.0e15)
    fail(ErrorCode::kParse, "synth config key '" + std::string(key) + "' must be an integer");
  return static_cast<long long>(v);
}

std::uint64_t parse_u64(std::string_view s, std::string_view key) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    fail(ErrorCode::kParse, "synth config key '" + std::string(key) + "' must be an unsigned integer");
  return v;
}

// Matrices are resolved after `dim` is known, so keep the raw text.
Matrix parse_matrix(std::string_view spec, int dim, std::string_view key) {
  const std::string where = "synth config key '" + std::string(key) + "'";
  auto colon = spec.find(':');
  if (colon == std::string_view::npos)
    fail(ErrorCode::kParse, where + ": expected isotropic:, diag: or full:");
  std::string_view kind = spec.substr(0, colon);
  std::string_view body = spec.substr(colon + 1);
  if (kind == "isotropic") {
    return parse_double(trim(body), where) * Matrix::Identity(dim, dim);
  }
  if (kind == "diag") {
    auto v = parse_list(body, key);
    if (static_cast<int>(v.size()) != dim)
      fail(ErrorCode::kDimension, where + ": diag needs " + std::to_string(dim) + " values");
    return Eigen::Map<Vector>(v.data(), dim).asDiagonal();
  }
  if (kind == "full") {
    auto v = parse_list(body, key);
    if (static_cast<long long>(v.size()) != static_cast<long long>(dim) * dim)
      fail(ErrorCode::kDimension, where + ": full needs " + std::to_string(dim * dim) + " values");
    Matrix m(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) m(r, c) = v[static_cast<std::size_t>(r) * dim + c];
    return m;
  }
  fail(ErrorCode::kParse, where + ": unknown matrix form '" + std::string(kind) + "'");
}

Vector parse_vector(std::string_view spec, int dim, std::string_view key) {
  if (spec == "zeros") return Vector::Zero(dim);
  if (spec.rfind("constant:", 0) == 0)
    return Vector::Constant(dim, parse_double(trim(spec.substr(9)), "synth config key '" + std::string(key) + "'"));
  auto v = parse_list(spec, key);
  if (static_cast<int>(v.size()) != dim)
    fail(ErrorCode::kDimension, "synth config key '" + std::string(key) + "' needs " +
                                    std::to_string(dim) + " values");
  return Eigen::Map<Vector>(v.data(), dim);
}

std::string zero_pad(std::size_t value, std::size_t width) {
  std::string s = std::to_string(value);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

GaussianStream::GaussianStream(std::uint64_t seed, std::uint64_t stream)
    : engine_(splitmix64(seed ^ splitmix64(stream))) {}

double GaussianStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t GaussianStream::below(std::uint64_t bound) {
  require(bound > 0, ErrorCode::kInvalidArgument, "empty sampling range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double GaussianStream::next() {
  if (spare_) {
    double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 == 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  return r * std::cos(angle);
}

Vector GaussianStream::next_vector(Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = next();
  return v;
}

Matrix psd_factor(const Matrix& cov, const char* what) {
  require((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, cov.cwiseAbs().maxCoeff()),
          ErrorCode::kNumeric, std::string(what) + " is not symmetric");
  SymmetricEigen e = symmetric_eigen(cov);
  const double tol = 1e-10 * std::max(1.0, std::abs(e.values(0)));
  if (e.values.minCoeff() < -tol)
    fail(ErrorCode::kNumeric, std::string(what) + " is not positive semi-definite (min eigenvalue " +
                                  std::to_string(e.values.minCoeff()) + ")");
  return e.vectors * e.values.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

void SynthConfig::validate() const {
  require(dim >= 1, ErrorCode::kInvalidArgument, "synth: dim must be >= 1");
  require(n_speakers >= 1, ErrorCode::kInvalidArgument, "synth: speakers must be >= 1");
  require(utts_per_speaker >= 1, ErrorCode::kInvalidArgument, "synth: utts must be >= 1");
  auto square = [&](const Matrix& m, const char* what) {
    require(m.rows() == dim && m.cols() == dim, ErrorCode::kDimension,
            std::string("synth: ") + what + " must be " + std::to_string(dim) + "x" + std::to_string(dim));
  };
  square(between_cov, "between covariance");
  square(within_cov, "within covariance");
  require(global_mean.size() == 0 || global_mean.size() == dim, ErrorCode::kDimension,
          "synth: mean has wrong dimension");
  if (shift) {
    require(shift->matrix.cols() == dim && shift->matrix.rows() >= 1, ErrorCode::kDimension,
            "synth: shift matrix must have dim columns");
    require(shift->offset.size() == shift->matrix.rows(), ErrorCode::kDimension,
            "synth: shift offset must match shift matrix rows");
  }
  psd_factor(between_cov, "between covariance");
  SymmetricEigen w = symmetric_eigen(within_cov);
  require(w.values.minCoeff() > 0.0, ErrorCode::kNumeric,
          "synth: within covariance must be positive definite");
}

SynthConfig parse_synth_config(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      auto eq = line.find('=');
      if (eq == std::string_view::npos)
        fail(ErrorCode::kParse, "synth config line " + std::to_string(line_no) + ": expected key = value");
      kv.emplace_back(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
    }
    if (end == text.size()) break;
    start = end + 1;
  }

  SynthConfig cfg;
  std::string between = "isotropic:1", within = "isotropic:1", mean = "zeros";
  std::optional<std::string> shift_matrix, shift_offset;
  for (const auto& [k, v] : kv) {
    if (k == "dim") cfg.dim = static_cast<int>(parse_int(v, k));
    else if (k == "speakers") cfg.n_speakers = static_cast<int>(parse_int(v, k));
    else if (k == "utts") cfg.utts_per_speaker = static_cast<int>(parse_int(v, k));
    else if (k == "between") between = v;
    else if (k == "within") within = v;
    else if (k == "mean") mean = v;
    else if (k == "shift_matrix") shift_matrix = v;
    else if (k == "shift_offset") shift_offset = v;
    else if (k == "seed") cfg.seed = parse_u64(v, k);
    else if (k == "noise_seed") cfg.noise_seed = parse_u64(v, k);
    else if (k == "speaker_prefix") cfg.speaker_prefix = v;
    else if (k == "dataset") cfg.dataset_id = v;
    else if (k == "unlabeled") cfg.unlabeled = parse_int(v, k) != 0;
    else fail(ErrorCode::kParse, "synth config: unknown key '" + k + "'");
  }
  require(cfg.dim >= 1, ErrorCode::kInvalidArgument, "synth config: dim must be >= 1");
  cfg.between_cov = parse_matrix(between, cfg.dim, "between");
  cfg.within_cov = parse_matrix(within, cfg.dim, "within");
  cfg.global_mean = parse_vector(mean, cfg.dim, "mean");
  if (shift_matrix || shift_offset) {
    AffineShift s;
    s.matrix = shift_matrix ? parse_matrix(*shift_matrix, cfg.dim, "shift_matrix")
                            : Matrix(Matrix::Identity(cfg.dim, cfg.dim));
    s.offset = shift_offset ? parse_vector(*shift_offset, cfg.dim, "shift_offset")
                            : Vector(Vector::Zero(cfg.dim));
    cfg.shift = std::move(s);
  }
  cfg.validate();
  return cfg;
}

EmbeddingSet generate(const SynthConfig& cfg) {
  cfg.validate();
  const Matrix between_factor = psd_factor(cfg.between_cov, "between covariance");
  const Matrix within_factor = psd_factor(cfg.within_cov, "within covariance");
  const Vector mean = cfg.global_mean.size() == 0 ? Vector(Vector::Zero(cfg.dim)) : cfg.global_mean;
  const std::uint64_t noise_seed = cfg.noise_seed.value_or(cfg.seed);
  const std::string dataset =
      !cfg.dataset_id.empty() ? cfg.dataset_id : (cfg.shift ? "shifted" : "synth");
  const auto n_spk = static_cast<std::size_t>(cfg.n_speakers);
  const auto n_utt = static_cast<std::size_t>(cfg.utts_per_speaker);
  const std::size_t spk_width = std::to_string(n_spk - 1).size();
  const std::size_t utt_width = std::to_string(n_utt - 1).size();

  std::vector<std::vector<Vector>> per_speaker(n_spk);
  parallel_for(n_spk, [&](std::size_t s) {
    GaussianStream latent(cfg.seed, 2 * s);
    GaussianStream noise(noise_seed, 2 * s + 1);
    const Vector y = between_factor * latent.next_vector(cfg.dim);
    auto& out = per_speaker[s];
    out.reserve(n_utt);
    for (std::size_t u = 0; u < n_utt; ++u) {
      Vector x = mean + y + within_factor * noise.next_vector(cfg.dim);
      if (cfg.shift) x = cfg.shift->matrix * x + cfg.shift->offset;
      out.push_back(std::move(x));
    }
  });

  EmbeddingSet set;
  for (std::size_t s = 0; s < n_spk; ++s) {
    const std::string spk = cfg.speaker_prefix + zero_pad(s, spk_width);
    for (std::size_t u = 0; u < n_utt; ++u) {
      set.add({spk + "-" + zero_pad(u, utt_width), cfg.unlabeled ? std::string(kUnknownSpeaker) : spk,
               dataset, std::move(per_speaker[s][u])});
    }
  }
  return set;
}

TrialList make_trials(const EmbeddingSet& set, std::size_t n_target, std::size_t n_nontarget,
                      std::uint64_t seed) {
  for (const Embedding& e : set)
    require(e.labeled(), ErrorCode::kInvalidArgument,
            "make_trials needs speaker labels; record '" + e.utt_id + "' is unlabeled");
  const std::size_t n = set.size();
  std::vector<std::pair<std::size_t, std::size_t>> targets;
  std::size_t n_same = 0;
  for (const auto& [spk, idx] : group_by_speaker(set, "make_trials")) {
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b) targets.emplace_back(idx[a], idx[b]);
    n_same += idx.size() * (idx.size() - 1) / 2;
  }
  const std::size_t n_pairs = n * (n - (n > 0 ? 1 : 0)) / 2;
  const std::size_t n_diff = n_pairs - n_same;
  if (n_target > targets.size())
    fail(ErrorCode::kInvalidArgument, "requested " + std::to_string(n_target) +
                                          " target trials but only " + std::to_string(targets.size()) +
                                          " same-speaker pairs exist");
  if (n_nontarget > n_diff)
    fail(ErrorCode::kInvalidArgument, "requested " + std::to_string(n_nontarget) +
                                          " nontarget trials but only " + std::to_string(n_diff) +
                                          " different-speaker pairs exist");

  GaussianStream rng(seed, 0);
  // Partial Fisher-Yates over the same-speaker pairs.
  for (std::size_t i = 0; i < n_target; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(targets.size() - i));
    std::swap(targets[i], targets[j]);
  }
  targets.resize(n_target);

  std::vector<std::pair<std::size_t, std::size_t>> nontargets;
  if (n_nontarget * 2 > n_diff) {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        if (set[a].speaker_id != set[b].speaker_id) nontargets.emplace_back(a, b);
    for (std::size_t i = 0; i < n_nontarget; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.below(nontargets.size() - i));
      std::swap(nontargets[i], nontargets[j]);
    }
    nontargets.resize(n_nontarget);
  } else {
    std::set<std::pair<std::size_t, std::size_t>> seen;
    while (nontargets.size() < n_nontarget) {
      std::size_t a = rng.below(n), b = rng.below(n);
      if (a == b || set[a].speaker_id == set[b].speaker_id) continue;
      if (a > b) std::swap(a, b);
      if (seen.insert({a, b}).second) nontargets.emplace_back(a, b);
    }
  }

  TrialList trials;
  for (auto [a, b] : targets) trials.add({set[a].utt_id, set[b].utt_id, TrialLabel::kTarget});
  for (auto [a, b] : nontargets) trials.add({set[a].utt_id, set[b].utt_id, TrialLabel::kNontarget});
  return trials;
}

}  // namespace embedspace
