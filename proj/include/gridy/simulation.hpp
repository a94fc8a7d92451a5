#pragma once

#include "gridy/core_data.hpp"
#include "gridy/random.hpp"

#include <array>
#include <cstdint>
#include <optional>

namespace gridy {

struct SimulationConfig {
  Eigen::Index d = 100;
  Eigen::Index T = 200;
  std::size_t K = 10;         // subjects per group
  Eigen::Index r_joint = 2;
  Eigen::Index r_group = 2;
  int corr_type = 1;          // 1: banded correlations, 2: identity
  double c = 1.0;
  std::optional<double> sigma_xi;  // defaults to 0.2 for type 1, 0.3 for type 2
  double sigma_eps = 1.0;     // noise variance
  std::uint64_t seed = 1;
  int burn_in = 200;
  /// Replace each subject's scaled factors by a series with the same column
  /// space whose cross-product is exactly T * Phi, so the simultaneous
  /// component model holds exactly in noiseless data.
  bool exact_cross_products = false;

  double xi_variance() const { return sigma_xi.value_or(corr_type == 1 ? 0.2 : 0.3); }
  /// Throws ConfigError on an inadmissible configuration.
  void validate() const;
};

struct Loadings {
  Matrix joint;
  std::array<Matrix, 2> group;
};

/// 50% of the rows carry joint loadings, half of the rest the first group's,
/// the remainder the second group's; nonzero entries Unif(0, 1).
Loadings gen_loadings(Eigen::Index d, Eigen::Index r_joint, Eigen::Index r_group, Rng& rng);

/// Correlation structure of the scaled factors: type 1 is the banded matrix for
/// r <= 4, type 2 the identity.
Matrix factor_correlation(int type, Eigen::Index r);

/// Symmetric stable Psi with Phi = Psi Phi Psi' + sigma_xi I.
Matrix solve_stationary_transition(const Matrix& phi, double sigma_xi);

/// T steps of A_t = Psi A_{t-1} + xi_t, xi_t ~ N(0, sigma_xi I), after `burn_in`
/// discarded steps from A_0 = 0. Rows are time points.
Matrix simulate_var1(const Matrix& psi, double sigma_xi, Eigen::Index T, int burn_in, Rng& rng);

struct SimulatedData {
  MultiBlockDataset data;
  GroundTruth truth;
};

/// Subjects 1..K form group 1 and K+1..2K group 2. Loadings use sub-stream
/// ("loadings"), subject k's factors ("factors", k) and its noise ("noise", k).
SimulatedData simulate_dataset(const SimulationConfig& config);

/// Signal-to-noise ratio ||B_J C Phi C B_J' + B_g C Phi C B_g'||_F / ||Sigma_E||_F,
/// averaged over the two groups.
double snr_value(const GroundTruth& truth);

}  // namespace gridy
