#pragma once

#include "gridy/core_data.hpp"
#include "gridy/linalg.hpp"
#include "gridy/parallel.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace gridy {

/// Leading `rank` singular triplets of one block, 1 <= rank <= min(T, d).
Svd truncated_svd(const Matrix& x, Eigen::Index rank);

struct StackedSpectrum {
  Vector singvals;     // non-increasing, length min(sum of ranks, d)
  Matrix right_basis;  // d x length
};

/// SVD of the matrix stacking every block's V' on top of each other.
StackedSpectrum stack_and_svd(std::span<const Svd> svds);

/// 5th percentile over `reps` replications of the largest singular value of the
/// stack built from random orthonormal d x r_k bases. Replication m uses
/// sub-stream ("random_direction", m) of `seed`.
double random_direction_threshold(Eigen::Index d, std::span<const int> ranks, int reps, std::uint64_t seed,
                                  Execution exec = Execution::parallel);

/// 95th percentile over `reps` replications of the Wedin lower bound on the
/// squared stacked singular values. Block k's perturbation norms are estimated
/// with random orthonormal bases drawn inside the complements of its singular
/// subspaces (sub-stream ("wedin", m)).
double wedin_threshold(std::span<const Matrix> blocks, std::span<const Svd> svds, int reps, std::uint64_t seed,
                       Execution exec = Execution::parallel);

/// Number of stacked singular values above the random-direction threshold whose
/// squares also exceed the Wedin threshold.
int select_joint_rank(const Vector& singvals, double random_direction, double wedin);

struct AjiveOptions {
  int reps = 100;                        // M = L
  std::optional<int> joint_rank;         // bypasses the threshold rule when set
  Execution execution = Execution::parallel;
};

struct SegmentationResult {
  int joint_rank = 0;
  bool joint_rank_overridden = false;
  Matrix joint_basis;                    // d x joint_rank, orthonormal columns
  std::vector<Matrix> joint_blocks;      // X_k P_J
  std::vector<Matrix> group_blocks;      // X_k (V_k V_k' - P_J)
  std::vector<Svd> block_svds;           // rank-r_k truncations
  std::vector<int> subject_ranks;
  double random_direction_threshold = 0.0;
  double wedin_threshold = 0.0;
  Vector stacked_singvals;

  Matrix joint_projector() const { return joint_basis * joint_basis.transpose(); }
};

/// Segments every block of `data`. `ranks[k]` is the initial rank of subject k
/// and must be positive; zero-rank subjects have to be excluded beforehand.
SegmentationResult segment(const MultiBlockDataset& data, std::span<const int> ranks, const AjiveOptions& options,
                           std::uint64_t seed);

}  // namespace gridy
