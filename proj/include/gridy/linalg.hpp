#pragma once

#include "gridy/types.hpp"

#include <span>
#include <vector>

namespace gridy {

/// Thin singular value decomposition X = U diag(S) V' with S non-increasing.
struct Svd {
  Matrix U;
  Vector S;
  Matrix V;
};

/// All min(rows, cols) singular triplets.
Svd thin_svd(const Matrix& x);

/// Leading `rank` singular triplets. Uses the eigendecomposition of the Gram
/// matrix on the smaller side, which is the hot path of the bootstrap loops.
Svd leading_svd(const Matrix& x, Eigen::Index rank);

double spectral_norm(const Matrix& x);
double smallest_singular_value(const Matrix& x);

/// Cosine of the largest principal angle between span(a) and span(b) where both
/// have orthonormal columns: the smallest singular value of a'b.
double largest_angle_cosine(const Matrix& a, const Matrix& b);

/// Largest principal angle in radians. Small angles come from the residual sine.
double largest_principal_angle(const Matrix& a, const Matrix& b);

/// Linear-interpolation percentile (the default "type 7" definition), p in [0, 100].
double percentile(std::vector<double> values, double p);

double median(std::vector<double> values);

/// Number of singular values above rel_tol * sigma_1.
Eigen::Index numerical_rank(const Matrix& x, double rel_tol = 1e-8);

/// Subtracts column means in place and returns them.
Vector center_columns(Matrix& x);

/// Symmetric part (M + M') / 2.
Matrix symmetrize(const Matrix& m);

}  // namespace gridy
