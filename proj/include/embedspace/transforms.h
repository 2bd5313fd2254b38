// include/embedspace/transforms.h

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

#ifndef EMBEDSPACE_TRANSFORMS_H_
#define EMBEDSPACE_TRANSFORMS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embedspace/data_model.h"

namespace embedspace {

enum class TransformKind : std::uint32_t {
  kCenter = 0,
  kLda = 1,
  kLsda = 2,
  kCoral = 3,
  kWhiten = 4,
  kCompose = 5,
};

std::string_view transform_kind_name(TransformKind kind);

/// Affine map y = matrix * x + offset, matrix of shape out_dim x in_dim.
struct LinearTransform {
  Matrix matrix;
  Vector offset;
  TransformKind kind = TransformKind::kCompose;

  std::size_t in_dim() const { return static_cast<std::size_t>(matrix.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(matrix.rows()); }

  Vector apply(const Vector& x) const;
  EmbeddingSet apply(const EmbeddingSet& set) const;

  static LinearTransform identity(std::size_t dim);
};

/// The transform applying `first`, then `second`.
LinearTransform compose(const LinearTransform& first, const LinearTransform& second);

/// Per-dataset means used for dataset-wise centering.
struct DatasetMeans {
  std::size_t dim = 0;
  std::map<std::string, Vector> means;

  /// Arithmetic mean of the stored means (fallback for unseen datasets).
  Vector fallback_mean() const;
  /// Centering transform for one dataset.
  LinearTransform transform_for(std::string_view dataset_id) const;
};

DatasetMeans fit_dataset_centering(const EmbeddingSet& train);
/// Fits over several sets at once; a dataset appearing in more than one set
/// gets the mean over all of its records.
DatasetMeans fit_dataset_centering(std::span<const EmbeddingSet* const> sets);

enum class CenteringFallback { kGlobalMean, kError };

EmbeddingSet apply_centering(const EmbeddingSet& set, const DatasetMeans& means,
                             CenteringFallback fallback);

/// Rows are generalized eigenvectors of (S_between, S_within), descending,
/// scaled so the projected within-class covariance is the identity. Biased
/// scatter estimates; a rank-deficient S_within is regularized by
/// 1e-6 * trace / D on the diagonal. Offset is zero.
LinearTransform fit_lda(const EmbeddingSet& train, std::size_t out_dim);

struct LsdaOptions {
  std::size_t k_neighbors = 10;
  double alpha = 0.5;
};

/// Symmetric k-nearest-neighbour graph of the LSDA construction: Euclidean
/// distance between length-normalized vectors, binary weights, an edge when
/// either endpoint is among the other's k nearest. Edges split by label.
struct LsdaGraph {
  std::vector<std::pair<std::size_t, std::size_t>> within_edges;   // i < j
  std::vector<std::pair<std::size_t, std::size_t>> between_edges;  // i < j
};

LsdaGraph build_lsda_graph(const EmbeddingSet& train, std::size_t k_neighbors);

/// Numerator X(alpha L_b + (1-alpha) W_w)X' and constraint X D_w X'.
struct LsdaProblem {
  Matrix objective;
  Matrix constraint;
};

LsdaProblem lsda_problem(const EmbeddingSet& train, const LsdaGraph& graph, double alpha);

/// Maximizes a' objective a subject to a' constraint a = 1; rows in
/// descending eigenvalue order. A rank-deficient constraint is regularized
/// like LDA's within-class scatter.
LinearTransform fit_lsda(const EmbeddingSet& train, std::size_t out_dim,
                         const LsdaOptions& options = {});

/// Relative default ridge for CORAL: 1e-3 * trace(C) / D.
inline constexpr double kCoralRelativeRidge = 1e-3;

/// y = C_t^{1/2} (C_s + r_s I)^{-1/2} x with C_t regularized alike. With no
/// ridge given each covariance gets the relative default. Offset is zero.
LinearTransform fit_coral(const EmbeddingSet& source, const EmbeddingSet& target,
                          std::optional<double> ridge = std::nullopt);

/// y = (C + ridge I)^{-1/2} (x - mean) from in-domain statistics.
LinearTransform fit_whitening(const EmbeddingSet& indomain, double ridge = 0.0);

/// Scales every vector to unit Euclidean norm.
EmbeddingSet length_normalize(const EmbeddingSet& set);

// "LXF1" container: u32 kind, u32 rows, u32 cols, row-major f64 matrix,
// f64 offset.
std::string serialize_transform(const LinearTransform& t);
LinearTransform parse_transform(std::string_view bytes);

// "DSM1" container: u32 dim, u32 count, then per dataset a u16-length id
// and dim f64 values, ids in ascending order.
std::string serialize_dataset_means(const DatasetMeans& means);
DatasetMeans parse_dataset_means(std::string_view bytes);

}  // namespace embedspace

#endif  // EMBEDSPACE_TRANSFORMS_H_
