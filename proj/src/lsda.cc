// src/lsda.cc

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

#include <algorithm>
#include <numeric>

#include "embedspace/error.h"
#include "embedspace/linalg.h"
#include "embedspace/parallel.h"
#include "embedspace/transforms.h"

namespace embedspace {

LsdaGraph build_lsda_graph(const EmbeddingSet& train, std::size_t k_neighbors) {
  const std::size_t n = train.size();
  require(k_neighbors >= 1 && k_neighbors < n, ErrorCode::kInvalidArgument,
          "LSDA k_neighbors must satisfy 1 <= k < n_records (k=" + std::to_string(k_neighbors) +
              ", n=" + std::to_string(n) + ")");
  group_by_speaker(train, "LSDA");

  std::vector<Vector> unit(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double norm = train[i].vector.norm();
    require(norm > 0.0, ErrorCode::kNumeric, "LSDA: zero vector '" + train[i].utt_id + "'");
    unit[i] = train[i].vector / norm;
  }

  // neighbours[i] = k nearest of i, ties broken by index.
  std::vector<std::vector<std::size_t>> neighbours(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) dist.emplace_back((unit[i] - unit[j]).squaredNorm(), j);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_neighbors),
                      dist.end());
    auto& out = neighbours[i];
    for (std::size_t k = 0; k < k_neighbors; ++k) out.push_back(dist[k].second);
  });

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : neighbours[i]) edges.emplace_back(std::min(i, j), std::max(i, j));
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  LsdaGraph g;
  for (auto [i, j] : edges) {
    if (train[i].speaker_id == train[j].speaker_id)
      g.within_edges.emplace_back(i, j);
    else
      g.between_edges.emplace_back(i, j);
  }
  return g;
}

LsdaProblem lsda_problem(const EmbeddingSet& train, const LsdaGraph& graph, double alpha) {
  const auto d = static_cast<Eigen::Index>(train.dim());
  Matrix within_adj = Matrix::Zero(d, d);   // X W_w X'
  Matrix within_deg = Matrix::Zero(d, d);   // X D_w X'
  Matrix between_lap = Matrix::Zero(d, d);  // X L_b X'
  for (auto [i, j] : graph.within_edges) {
    const Vector& xi = train[i].vector;
    const Vector& xj = train[j].vector;
    within_adj.noalias() += xi * xj.transpose() + xj * xi.transpose();
    within_deg.noalias() += xi * xi.transpose() + xj * xj.transpose();
  }
  for (auto [i, j] : graph.between_edges) {
    Vector diff = train[i].vector - train[j].vector;
    between_lap.noalias() += diff * diff.transpose();
  }
  return {symmetrize(alpha * between_lap + (1.0 - alpha) * within_adj), symmetrize(within_deg)};
}

LinearTransform fit_lsda(const EmbeddingSet& train, std::size_t out_dim,
                         const LsdaOptions& options) {
  require(options.alpha >= 0.0 && options.alpha <= 1.0, ErrorCode::kInvalidArgument,
          "LSDA alpha must lie in [0, 1]");
  require(out_dim >= 1 && out_dim <= train.dim(), ErrorCode::kInvalidArgument,
          "LSDA output dimension must lie in [1, D]");
  LsdaGraph graph = build_lsda_graph(train, options.k_neighbors);
  LsdaProblem p = lsda_problem(train, graph, options.alpha);
  SymmetricEigen eig = generalized_symmetric_eigen(p.objective, regularize_scatter(p.constraint));
  LinearTransform t;
  t.kind = TransformKind::kLsda;
  t.matrix = eig.vectors.leftCols(static_cast<Eigen::Index>(out_dim)).transpose();
  t.offset = Vector::Zero(static_cast<Eigen::Index>(out_dim));
  return t;
}

}  // namespace embedspace
