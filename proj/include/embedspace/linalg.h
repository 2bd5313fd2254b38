// include/embedspace/linalg.h

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

#ifndef EMBEDSPACE_LINALG_H_
#define EMBEDSPACE_LINALG_H_

#include <vector>

#include "embedspace/data_model.h"

namespace embedspace {

struct SymmetricEigen {
  Vector values;   // descending
  Matrix vectors;  // columns, first nonzero component positive
};

/// Eigen-decomposition of a symmetric matrix, ordered by descending
/// eigenvalue with the sign convention applied to every eigenvector.
SymmetricEigen symmetric_eigen(const Matrix& m);

/// Generalized problem a v = lambda b v with b symmetric positive definite;
/// eigenvectors are b-orthonormal (v' b v = 1). Same ordering and sign rules.
SymmetricEigen generalized_symmetric_eigen(const Matrix& a, const Matrix& b);

/// Flips `v` so its first component with |v_i| > 1e-12 * max|v| is positive.
void canonicalize_sign(Eigen::Ref<Vector> v);

Matrix symmetrize(const Matrix& m);

/// Symmetric PSD square root through the eigen-decomposition; negative
/// eigenvalues are clamped to zero.
Matrix symmetric_sqrt(const Matrix& m);

/// Symmetric inverse square root; throws kNumeric unless all eigenvalues
/// are positive.
Matrix symmetric_inv_sqrt(const Matrix& m, const char* what);

/// Eigenvalues below `floor` are raised to `floor`.
Matrix floor_eigenvalues(const Matrix& m, double floor);

/// Mean of the columns.
Vector column_mean(const Matrix& columns);

/// Biased (divide-by-N) covariance of the columns.
Matrix biased_covariance(const Matrix& columns);

/// Mean and biased covariance of an embedding set.
Vector set_mean(const EmbeddingSet& set);
Matrix set_covariance(const EmbeddingSet& set);

/// Adds 1e-6 * trace / D to the diagonal of a rank-deficient scatter
/// matrix; full-rank input is returned unchanged.
Matrix regularize_scatter(const Matrix& scatter);

/// True when the smallest eigenvalue is <= rel_tol * largest.
bool is_rank_deficient(const Matrix& symmetric, double rel_tol = 1e-12);

}  // namespace embedspace

#endif  // EMBEDSPACE_LINALG_H_
