// src/linalg.cc

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

#include "embedspace/linalg.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "embedspace/error.h"

namespace embedspace {
namespace {

SymmetricEigen sort_descending(const Vector& values, const Matrix& vectors) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });
  SymmetricEigen out{Vector(n), Matrix(vectors.rows(), n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = values(order[k]);
    out.vectors.col(k) = vectors.col(order[k]);
    canonicalize_sign(out.vectors.col(k));
  }
  return out;
}

}  // namespace

void canonicalize_sign(Eigen::Ref<Vector> v) {
  const double scale = v.cwiseAbs().maxCoeff();
  if (scale == 0.0) return;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12 * scale) {
      if (v(i) < 0) v = -v;
      return;
    }
  }
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

SymmetricEigen symmetric_eigen(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(m));
  require(solver.info() == Eigen::Success, ErrorCode::kNumeric, "symmetric eigensolver failed");
  return sort_descending(solver.eigenvalues(), solver.eigenvectors());
}

SymmetricEigen generalized_symmetric_eigen(const Matrix& a, const Matrix& b) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(symmetrize(a), symmetrize(b),
                                                          Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  require(solver.info() == Eigen::Success, ErrorCode::kNumeric,
          "generalized eigensolver failed (is the constraint matrix positive definite?)");
  return sort_descending(solver.eigenvalues(), solver.eigenvectors());
}

Matrix symmetric_sqrt(const Matrix& m) {
  SymmetricEigen e = symmetric_eigen(m);
  Vector root = e.values.cwiseMax(0.0).cwiseSqrt();
  return symmetrize(e.vectors * root.asDiagonal() * e.vectors.transpose());
}

Matrix symmetric_inv_sqrt(const Matrix& m, const char* what) {
  SymmetricEigen e = symmetric_eigen(m);
  if (e.values.size() > 0 && !(e.values.minCoeff() > 0.0))
    fail(ErrorCode::kNumeric, std::string(what) + " is not positive definite (min eigenvalue " +
                                  std::to_string(e.values.minCoeff()) + ")");
  Vector inv_root = e.values.cwiseSqrt().cwiseInverse();
  return symmetrize(e.vectors * inv_root.asDiagonal() * e.vectors.transpose());
}

Matrix floor_eigenvalues(const Matrix& m, double floor) {
  SymmetricEigen e = symmetric_eigen(m);
  if (e.values.size() == 0 || e.values.minCoeff() >= floor) return symmetrize(m);
  Vector v = e.values.cwiseMax(floor);
  return symmetrize(e.vectors * v.asDiagonal() * e.vectors.transpose());
}

Vector column_mean(const Matrix& columns) {
  require(columns.cols() > 0, ErrorCode::kInvalidArgument, "mean of an empty set");
  return columns.rowwise().sum() / static_cast<double>(columns.cols());
}

Matrix biased_covariance(const Matrix& columns) {
  Vector mu = column_mean(columns);
  Matrix centered = columns.colwise() - mu;
  return symmetrize(centered * centered.transpose() / static_cast<double>(columns.cols()));
}

Vector set_mean(const EmbeddingSet& set) { return column_mean(set.as_columns()); }

Matrix set_covariance(const EmbeddingSet& set) { return biased_covariance(set.as_columns()); }

bool is_rank_deficient(const Matrix& symmetric, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(symmetric), Eigen::EigenvaluesOnly);
  const Vector& v = solver.eigenvalues();
  if (v.size() == 0) return true;
  return v.minCoeff() <= rel_tol * std::max(v.maxCoeff(), 0.0);
}

Matrix regularize_scatter(const Matrix& scatter) {
  if (!is_rank_deficient(scatter)) return scatter;
  double bump = 1e-6 * scatter.trace() / static_cast<double>(scatter.rows());
  if (!(bump > 0.0)) bump = 1e-6;
  return scatter + bump * Matrix::Identity(scatter.rows(), scatter.cols());
}

}  // namespace embedspace
