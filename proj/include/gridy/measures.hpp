#pragma once

#include "gridy/core_data.hpp"
#include "gridy/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace gridy {

/// Tucker congruence of the vectorized inputs.
double congruence(const Matrix& truth, const Matrix& estimate);

/// Mean of the per-column congruences.
double column_congruence(const Matrix& truth, const Matrix& estimate);

/// Mean over subjects of 1 - ||X_k - fitted_k||^2 / ||X_k||^2 (unclamped).
double r2_structure(const std::vector<Matrix>& blocks, const std::vector<Matrix>& fitted);

/// sqrt( (1 / (n d)) sum_k ||truth_k - fitted_k||^2 / T_k ) over n subjects.
double rmse_structure(const std::vector<Matrix>& truth, const std::vector<Matrix>& fitted);

struct StructureMeasures {
  double r2 = 0.0;
  double rmse = 0.0;
  double cc_b = 0.0;
  double cc_f = 0.0;
  double cc_psi = 0.0;
};

inline const std::array<const char*, 5> kMeasureNames = {"R2", "RMSE", "CC_B", "CC_F", "CC_Psi"};

/// Estimated quantities for the evaluated subjects.
struct EstimateView {
  std::vector<std::size_t> truth_index;  // position of each subject in the ground truth
  std::vector<Group> groups;
  std::vector<Matrix> blocks;            // raw X_k
  Matrix B_joint;
  std::array<Matrix, 2> B_group;
  std::vector<Matrix> F_joint;
  std::vector<Matrix> F_group;
  std::vector<Matrix> Psi_joint;         // lag-1 transition of F_joint per subject
  std::vector<Matrix> Psi_group;
};

/// Measures for joint, group 1 and group 2. Truth and estimate are compared on
/// the unit-norm-loadings scale after permutation and sign alignment.
std::array<StructureMeasures, 3> evaluate_structures(const GroundTruth& truth, const EstimateView& estimate);

}  // namespace gridy
