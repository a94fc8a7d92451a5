#pragma once

#include "gridy/parallel.hpp"
#include "gridy/types.hpp"

#include <vector>

namespace gridy {

struct RefitFactors {
  Matrix joint;  // T x r_J
  Matrix group;  // T x r_G
};

/// Least-squares factors F = X B (B'B)^{-1} for B = [B_joint B_group], split by
/// structure. Throws NumericalError when B is rank-deficient.
RefitFactors refit_factors(const Matrix& x, const Matrix& b_joint, const Matrix& b_group);

/// Biased (1/T) autocovariance of the rows of a column-centered series at lag h:
/// (1/T) sum_t F_t F_{t-h}'.
Matrix autocovariance(const Matrix& f, Eigen::Index lag);

struct VarFit {
  std::vector<Matrix> Psi;  // one r x r matrix per lag
  Matrix Sigma_eta;
  double spectral_radius = 0.0;  // of the companion matrix
};

/// Yule-Walker estimate of a VAR(p) for the rows of `f`. The series is demeaned
/// first. Throws NumericalError when the block-Toeplitz system is singular.
VarFit yule_walker(const Matrix& f, int order = 1);

/// Yule-Walker solution from autocovariances gamma[0..p].
VarFit yule_walker_from_autocovariances(const std::vector<Matrix>& gamma, int order);

/// Largest eigenvalue modulus of the VAR companion matrix.
double companion_spectral_radius(const std::vector<Matrix>& psi);

enum class NoiseCovarianceMode {
  paper,     // (Theta_J + Theta_G)(I + Sigma_E) + B_J S_J B_J' + B_G S_G B_G'
  expanded,  // Sigma_E + Theta Sigma_E Theta' + B_J S_J B_J' + B_G S_G B_G'
};

struct VarNetwork {
  Matrix theta_joint;
  Matrix theta_group;
  Matrix sigma_zeta;

  Matrix directed() const { return theta_joint + theta_group; }
};

/// Observation-level VAR(1) implied by the factor dynamics of one subject.
VarNetwork build_network(const Matrix& b_joint, const Matrix& b_group, const Matrix& psi_joint,
                         const Matrix& psi_group, const Matrix& sigma_e, const Matrix& sigma_eta_joint,
                         const Matrix& sigma_eta_group, NoiseCovarianceMode mode = NoiseCovarianceMode::paper);

struct VariableR2 {
  Vector r2;
  std::vector<bool> zero_variance;  // R^2 reported as 0 for these variables
};

/// R^2 of the simple regression (with intercept) of every column of `x` on `factor`.
VariableR2 r2_per_variable(const Matrix& x, const Vector& factor);

struct SubjectDynamics {
  RefitFactors factors;
  VarFit joint;
  VarFit group;
  Matrix sigma_e;        // diagonal residual covariance
  double refit_sse = 0.0;
};

/// Refit + Yule-Walker for every subject; `group_loadings[k]` is the group
/// loadings matrix of subject k's group.
std::vector<SubjectDynamics> estimate_dynamics(const std::vector<Matrix>& blocks, const Matrix& b_joint,
                                               const std::vector<Matrix>& group_loadings, int order = 1,
                                               Execution exec = Execution::parallel);

}  // namespace gridy
