// src/transforms.cc

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

#include "embedspace/transforms.h"

#include <algorithm>
#include <cmath>

#include "byte_io.h"
#include "embedspace/error.h"
#include "embedspace/linalg.h"

namespace embedspace {

std::string_view transform_kind_name(TransformKind kind) {
  switch (kind) {
    case TransformKind::kCenter: return "center";
    case TransformKind::kLda: return "lda";
    case TransformKind::kLsda: return "lsda";
    case TransformKind::kCoral: return "coral";
    case TransformKind::kWhiten: return "whiten";
    case TransformKind::kCompose: return "compose";
  }
  return "compose";
}

Vector LinearTransform::apply(const Vector& x) const {
  require(static_cast<std::size_t>(x.size()) == in_dim(), ErrorCode::kDimension,
          "transform expects dimension " + std::to_string(in_dim()) + ", got " +
              std::to_string(x.size()));
  return matrix * x + offset;
}

EmbeddingSet LinearTransform::apply(const EmbeddingSet& set) const {
  if (!set.empty())
    require(set.dim() == in_dim(), ErrorCode::kDimension,
            "transform expects dimension " + std::to_string(in_dim()) + ", set has " +
                std::to_string(set.dim()));
  std::vector<Vector> out;
  out.reserve(set.size());
  for (const Embedding& e : set) out.push_back(matrix * e.vector + offset);
  EmbeddingSet result = set.with_vectors(std::move(out));
  return result.empty() ? EmbeddingSet(out_dim()) : result;
}

LinearTransform LinearTransform::identity(std::size_t dim) {
  return {Matrix::Identity(dim, dim), Vector::Zero(dim), TransformKind::kCompose};
}

LinearTransform compose(const LinearTransform& first, const LinearTransform& second) {
  require(second.in_dim() == first.out_dim(), ErrorCode::kDimension,
          "cannot compose: inner dimensions " + std::to_string(first.out_dim()) + " and " +
              std::to_string(second.in_dim()) + " differ");
  return {second.matrix * first.matrix, second.matrix * first.offset + second.offset,
          TransformKind::kCompose};
}

Vector DatasetMeans::fallback_mean() const {
  require(!means.empty(), ErrorCode::kInvalidArgument, "no dataset means fitted");
  Vector sum = Vector::Zero(dim);
  for (const auto& [id, m] : means) sum += m;
  return sum / static_cast<double>(means.size());
}

LinearTransform DatasetMeans::transform_for(std::string_view dataset_id) const {
  auto it = means.find(std::string(dataset_id));
  require(it != means.end(), ErrorCode::kLookup,
          "no mean fitted for dataset '" + std::string(dataset_id) + "'");
  return {Matrix::Identity(dim, dim), -it->second, TransformKind::kCenter};
}

DatasetMeans fit_dataset_centering(std::span<const EmbeddingSet* const> sets) {
  DatasetMeans out;
  std::map<std::string, std::pair<Vector, std::size_t>> acc;
  for (const EmbeddingSet* set : sets) {
    if (set->empty()) continue;
    if (out.dim == 0) out.dim = set->dim();
    require(set->dim() == out.dim, ErrorCode::kDimension, "centering inputs differ in dimension");
    for (const Embedding& e : *set) {
      auto [it, inserted] = acc.try_emplace(e.dataset_id, Vector::Zero(out.dim), 0);
      it->second.first += e.vector;
      it->second.second += 1;
    }
  }
  require(!acc.empty(), ErrorCode::kInvalidArgument, "cannot fit centering on an empty set");
  for (auto& [id, sum_count] : acc)
    out.means.emplace(id, sum_count.first / static_cast<double>(sum_count.second));
  return out;
}

DatasetMeans fit_dataset_centering(const EmbeddingSet& train) {
  const EmbeddingSet* sets[] = {&train};
  return fit_dataset_centering(sets);
}

EmbeddingSet apply_centering(const EmbeddingSet& set, const DatasetMeans& means,
                             CenteringFallback fallback) {
  if (set.empty()) return set;
  require(set.dim() == means.dim, ErrorCode::kDimension,
          "centering fitted for dimension " + std::to_string(means.dim) + ", set has " +
              std::to_string(set.dim()));
  std::optional<Vector> global;
  std::vector<Vector> out;
  out.reserve(set.size());
  for (const Embedding& e : set) {
    auto it = means.means.find(e.dataset_id);
    if (it != means.means.end()) {
      out.push_back(e.vector - it->second);
      continue;
    }
    if (fallback == CenteringFallback::kError)
      fail(ErrorCode::kLookup, "dataset '" + e.dataset_id + "' (record '" + e.utt_id +
                                   "') was not seen when fitting centering");
    if (!global) global = means.fallback_mean();
    out.push_back(e.vector - *global);
  }
  return set.with_vectors(std::move(out));
}

LinearTransform fit_lda(const EmbeddingSet& train, std::size_t out_dim) {
  auto groups = group_by_speaker(train, "LDA");
  require(groups.size() >= 2 && train.size() >= 2, ErrorCode::kInvalidArgument,
          "LDA needs at least 2 speakers");
  require(out_dim >= 1, ErrorCode::kInvalidArgument, "LDA output dimension must be >= 1");
  const std::size_t max_dim = std::min(train.dim(), groups.size() - 1);
  if (out_dim > max_dim)
    fail(ErrorCode::kInvalidArgument, "LDA output dimension " + std::to_string(out_dim) +
                                          " exceeds min(D, n_speakers - 1) = " +
                                          std::to_string(max_dim));
  const auto d = static_cast<Eigen::Index>(train.dim());
  const double n = static_cast<double>(train.size());
  const Vector global = set_mean(train);
  Matrix within = Matrix::Zero(d, d);
  Matrix between = Matrix::Zero(d, d);
  for (const auto& [spk, idx] : groups) {
    Vector m = Vector::Zero(d);
    for (std::size_t i : idx) m += train[i].vector;
    m /= static_cast<double>(idx.size());
    for (std::size_t i : idx) {
      Vector r = train[i].vector - m;
      within.noalias() += r * r.transpose();
    }
    Vector dm = m - global;
    between.noalias() += static_cast<double>(idx.size()) * dm * dm.transpose();
  }
  within /= n;
  between /= n;
  SymmetricEigen eig = generalized_symmetric_eigen(between, regularize_scatter(within));
  LinearTransform t;
  t.kind = TransformKind::kLda;
  t.matrix = eig.vectors.leftCols(static_cast<Eigen::Index>(out_dim)).transpose();
  t.offset = Vector::Zero(static_cast<Eigen::Index>(out_dim));
  return t;
}

LinearTransform fit_coral(const EmbeddingSet& source, const EmbeddingSet& target,
                          std::optional<double> ridge) {
  require(!source.empty() && !target.empty(), ErrorCode::kInvalidArgument,
          "CORAL needs non-empty source and target sets");
  require(source.dim() == target.dim(), ErrorCode::kDimension,
          "CORAL source dimension " + std::to_string(source.dim()) +
              " differs from target dimension " + std::to_string(target.dim()));
  if (ridge) require(*ridge >= 0.0, ErrorCode::kInvalidArgument, "CORAL ridge must be >= 0");
  const auto d = static_cast<Eigen::Index>(source.dim());
  const Matrix identity = Matrix::Identity(d, d);
  auto regularized = [&](const Matrix& c) {
    const double r = ridge ? *ridge : kCoralRelativeRidge * c.trace() / static_cast<double>(d);
    return Matrix(c + r * identity);
  };
  const Matrix cs = regularized(set_covariance(source));
  const Matrix ct = regularized(set_covariance(target));
  LinearTransform t;
  t.kind = TransformKind::kCoral;
  t.matrix = symmetric_sqrt(ct) * symmetric_inv_sqrt(cs, "CORAL source covariance");
  t.offset = Vector::Zero(d);
  return t;
}

LinearTransform fit_whitening(const EmbeddingSet& indomain, double ridge) {
  require(!indomain.empty(), ErrorCode::kInvalidArgument, "whitening needs a non-empty set");
  require(ridge >= 0.0, ErrorCode::kInvalidArgument, "whitening ridge must be >= 0");
  const auto d = static_cast<Eigen::Index>(indomain.dim());
  const Vector mu = set_mean(indomain);
  const Matrix c = set_covariance(indomain) + ridge * Matrix::Identity(d, d);
  LinearTransform t;
  t.kind = TransformKind::kWhiten;
  t.matrix = symmetric_inv_sqrt(c, "in-domain covariance");
  t.offset = -t.matrix * mu;
  return t;
}

EmbeddingSet length_normalize(const EmbeddingSet& set) {
  std::vector<Vector> out;
  out.reserve(set.size());
  for (const Embedding& e : set) {
    const double norm = e.vector.norm();
    require(norm > 0.0, ErrorCode::kNumeric,
            "cannot length-normalize zero vector '" + e.utt_id + "'");
    out.push_back(e.vector / norm);
  }
  return set.with_vectors(std::move(out));
}

std::string serialize_transform(const LinearTransform& t) {
  internal::ByteWriter w;
  w.raw("LXF1");
  w.u32(static_cast<std::uint32_t>(t.kind));
  w.u32(static_cast<std::uint32_t>(t.matrix.rows()));
  w.u32(static_cast<std::uint32_t>(t.matrix.cols()));
  w.matrix(t.matrix);
  w.vector(t.offset);
  return w.take();
}

LinearTransform parse_transform(std::string_view bytes) {
  internal::ByteReader r(bytes, "transform file");
  r.expect_magic("LXF1");
  const std::uint32_t kind = r.u32();
  require(kind <= static_cast<std::uint32_t>(TransformKind::kCompose), ErrorCode::kParse,
          "transform file: unknown kind tag " + std::to_string(kind));
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  require(rows >= 1 && cols >= 1, ErrorCode::kParse, "transform file: empty matrix");
  LinearTransform t;
  t.kind = static_cast<TransformKind>(kind);
  t.matrix = r.matrix(rows, cols);
  t.offset = r.vector(rows);
  r.expect_end();
  require(t.matrix.allFinite() && t.offset.allFinite(), ErrorCode::kNumeric,
          "transform file: non-finite values");
  return t;
}

std::string serialize_dataset_means(const DatasetMeans& means) {
  internal::ByteWriter w;
  w.raw("DSM1");
  w.u32(static_cast<std::uint32_t>(means.dim));
  w.u32(static_cast<std::uint32_t>(means.means.size()));
  for (const auto& [id, m] : means.means) {
    w.str16(id);
    w.vector(m);
  }
  return w.take();
}

DatasetMeans parse_dataset_means(std::string_view bytes) {
  internal::ByteReader r(bytes, "dataset means file");
  r.expect_magic("DSM1");
  DatasetMeans out;
  out.dim = r.u32();
  const std::uint32_t count = r.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    std::string id = r.str16();
    Vector m = r.vector(out.dim);
    require(out.means.emplace(std::move(id), std::move(m)).second, ErrorCode::kParse,
            "dataset means file: duplicate dataset id");
  }
  r.expect_end();
  return out;
}

}  // namespace embedspace
