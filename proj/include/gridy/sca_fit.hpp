#pragma once

#include "gridy/parallel.hpp"
#include "gridy/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gridy {

/// Simultaneous component model X_k ~ P_k A C_k B' with P_k'P_k = I.
struct ScaModel {
  Matrix B;                      // d x r, unit-norm columns after normalization
  Matrix A;                      // r x r
  std::vector<Matrix> P;         // T_k x r
  std::vector<Vector> C;         // diagonal of C_k
  Matrix Phi;                    // A'A, unit diagonal after normalization
  std::vector<double> sse_trace; // objective after every iteration of the winning start
  double sse = 0.0;
  int iterations = 0;
  bool converged = false;
  int start = 0;                 // index of the winning start

  Eigen::Index rank() const { return B.cols(); }
};

struct ScaOptions {
  double tol = 1e-8;
  int max_iter = 500;
  int n_starts = 5;
  Execution execution = Execution::parallel;
};

/// P maximizing Tr(M P) over T x r matrices with orthonormal columns, for an
/// r x T matrix M: P = V U' from M = U S V'.
Matrix procrustes_rotation(const Matrix& m);

/// SCA-PF2 by alternating Procrustes rotations and CP-ALS sweeps. Start 0 is
/// the stacked-SVD initialization; start s > 0 perturbs it using sub-stream
/// ("start", s) of `seed`. The returned model is normalized.
ScaModel fit_pf2(std::span<const Matrix> blocks, Eigen::Index rank, const ScaOptions& options, std::uint64_t seed);

/// SCA-IND: the same fit with A held at the identity, so Phi = I exactly.
ScaModel fit_sca_ind(std::span<const Matrix> blocks, Eigen::Index rank, const ScaOptions& options,
                     std::uint64_t seed);

/// Unit-norm loadings with the largest-magnitude entry of each column positive,
/// then A rescaled so that A'A has a unit diagonal. Leaves every P_k A C_k B'
/// unchanged. Throws NumericalError on a vanishing component.
void normalize_model(ScaModel& model);

/// F_k = P_k A C_k for every subject.
std::vector<Matrix> extract_factors(const ScaModel& model);

/// Sum over subjects of ||X_k - F_k B'||_F^2.
double model_sse(std::span<const Matrix> blocks, const ScaModel& model);

}  // namespace gridy
