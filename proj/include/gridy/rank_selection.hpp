#pragma once

#include "gridy/core_data.hpp"
#include "gridy/linalg.hpp"
#include "gridy/parallel.hpp"
#include "gridy/random.hpp"
#include "gridy/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gridy {

/// Optimal operator-norm singular value shrinker h*(a) for aspect ratio beta.
/// Zero below the bulk edge 1 + sqrt(beta); equals beta^(1/4) at the edge.
double optimal_shrinker(double a, double beta);

struct ShrinkageResult {
  double kappa = 0.0;              // noise scale sigma_med / sqrt(MP(beta)_0.5)
  Vector shrunk;                   // kappa * h*(sigma_i / kappa), non-increasing
  Eigen::Index max_rank = 0;       // number of strictly positive shrunk values
  double beta = 1.0;               // min(d, T) / max(d, T)
  double median_singular_value = 0.0;
};

/// `singvals` must be non-increasing with length min(d, T). Throws
/// NumericalError when the median singular value is zero.
ShrinkageResult shrink_singular_values(const Vector& singvals, double beta);

/// Imputed noise: the first max_rank components get singular values
/// kappa * MP(beta)_{u_i} with u_i ~ Unif(0, 1) drawn from `rng`; the remaining
/// components are copied from the input decomposition.
Matrix impute_noise(const Svd& svd, const ShrinkageResult& shrink, Rng& rng);

struct BootstrapOptions {
  int reps = 100;   // L, also used as M for the random-direction bound
  double xi = 0.5;
  Execution execution = Execution::parallel;
};

struct BootstrapDiagnostics {
  ShrinkageResult shrinkage;
  std::vector<double> angle95_u;  // per r = 1..max_rank, radians
  std::vector<double> angle95_v;
  double theta0_u = 0.0;          // random-direction bounds
  double theta0_v = 0.0;
  int count_u = 0;
  int count_v = 0;
  bool degenerate = false;        // max_rank == 0
};

struct BootstrapResult {
  int rank = 0;
  BootstrapDiagnostics diagnostics;
};

/// Rotational bootstrap rank estimate for one T x d block. Replicate l draws its
/// rotations from sub-stream ("bootstrap", l) of `seed`, replicate m of the
/// random-direction bound from ("direction", m); the imputed noise uses
/// ("impute", 0).
BootstrapResult rotational_bootstrap(const Matrix& x, const BootstrapOptions& options, std::uint64_t seed);

/// Mode of `ranks`; ties go to the smallest mode.
int majority_vote(std::span<const int> ranks);

struct SubjectRank {
  std::string subject;
  Group group = Group::first;
  int rank = 0;
  BootstrapDiagnostics diagnostics;
};

struct RankReport {
  std::vector<SubjectRank> subjects;
  double xi = 0.5;
  int reps = 100;
  std::uint64_t seed = 0;
  int voted_rank = 0;

  std::vector<int> ranks() const;
};

/// Runs the rotational bootstrap on every subject (subject k uses
/// derive_seed(seed, "rank", k)) and takes the majority vote.
RankReport select_ranks(const MultiBlockDataset& data, const BootstrapOptions& options, std::uint64_t seed);

}  // namespace gridy
