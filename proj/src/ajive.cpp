#include "gridy/ajive.hpp"

#include "gridy/error.hpp"
#include "gridy/random.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gridy {

Svd truncated_svd(const Matrix& x, Eigen::Index rank) {
  if (rank < 1 || rank > std::min(x.rows(), x.cols()))
    throw ConfigError("truncated_svd: rank " + std::to_string(rank) + " outside [1, min(T, d)]");
  Svd full = thin_svd(x);
  return {full.U.leftCols(rank), full.S.head(rank), full.V.leftCols(rank)};
}

namespace {

Matrix stack_transposed(std::span<const Matrix> bases) {
  Eigen::Index rows = 0;
  for (const auto& b : bases) rows += b.cols();
  const Eigen::Index d = bases.empty() ? 0 : bases.front().rows();
  Matrix stacked(rows, d);
  Eigen::Index at = 0;
  for (const auto& b : bases) {
    if (b.rows() != d) throw ConfigError("stack_and_svd: bases disagree on d");
    stacked.middleRows(at, b.cols()) = b.transpose();
    at += b.cols();
  }
  return stacked;
}

}  // namespace

StackedSpectrum stack_and_svd(std::span<const Svd> svds) {
  std::vector<Matrix> bases;
  bases.reserve(svds.size());
  for (const auto& s : svds) bases.push_back(s.V);
  const Svd full = thin_svd(stack_transposed(bases));
  return {full.S, full.V};
}

double random_direction_threshold(Eigen::Index d, std::span<const int> ranks, int reps, std::uint64_t seed,
                                  Execution exec) {
  if (reps < 1) throw ConfigError("random_direction_threshold: reps must be >= 1");
  std::vector<double> top(static_cast<std::size_t>(reps));
  parallel_for(exec, reps, [&](std::ptrdiff_t m) {
    Rng rng = make_rng(seed, "random_direction", static_cast<std::uint64_t>(m));
    std::vector<Matrix> bases;
    bases.reserve(ranks.size());
    for (int r : ranks) bases.push_back(haar_orthonormal(d, r, rng));
    top[static_cast<std::size_t>(m)] = spectral_norm(stack_transposed(bases));
  });
  return percentile(std::move(top), 5.0);
}

double wedin_threshold(std::span<const Matrix> blocks, std::span<const Svd> svds, int reps, std::uint64_t seed,
                       Execution exec) {
  if (reps < 1) throw ConfigError("wedin_threshold: reps must be >= 1");
  if (blocks.size() != svds.size()) throw ConfigError("wedin_threshold: blocks and decompositions differ in count");
  const auto n_blocks = static_cast<double>(blocks.size());
  std::vector<double> bound(static_cast<std::size_t>(reps));
  parallel_for(exec, reps, [&](std::ptrdiff_t m) {
    Rng rng = make_rng(seed, "wedin", static_cast<std::uint64_t>(m));
    double total = 0.0;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const Matrix& x = blocks[k];
      const Svd& s = svds[k];
      // The complement may be thinner than the signal space for nearly square blocks.
      const Eigen::Index rv = std::min<Eigen::Index>(s.V.cols(), x.cols() - s.V.cols());
      const Eigen::Index ru = std::min<Eigen::Index>(s.U.cols(), x.rows() - s.U.cols());
      const Matrix v_perp = complement_orthonormal(s.V, rv, rng);
      const Matrix u_perp = complement_orthonormal(s.U, ru, rng);
      const double perturbation =
          std::max(spectral_norm(x * v_perp), spectral_norm(Matrix(x.transpose() * u_perp)));
      const double sigma_min = s.S.size() ? s.S(s.S.size() - 1) : 0.0;
      const double ratio = sigma_min > 0.0 ? std::min(perturbation / sigma_min, 1.0) : 1.0;
      total += ratio * ratio;
    }
    bound[static_cast<std::size_t>(m)] = n_blocks - total;
  });
  return percentile(std::move(bound), 95.0);
}

int select_joint_rank(const Vector& singvals, double random_direction, double wedin) {
  int count = 0;
  for (Eigen::Index i = 0; i < singvals.size(); ++i) {
    const double s = singvals(i);
    if (s > random_direction && s * s > wedin) ++count;
  }
  return count;
}

SegmentationResult segment(const MultiBlockDataset& data, std::span<const int> ranks, const AjiveOptions& options,
                           std::uint64_t seed) {
  if (ranks.size() != data.size()) throw ConfigError("segment: one initial rank per subject is required");
  const std::size_t n = data.size();
  SegmentationResult out;
  out.subject_ranks.assign(ranks.begin(), ranks.end());
  for (std::size_t k = 0; k < n; ++k)
    if (ranks[k] < 1)
      throw ConfigError("segment: subject '" + data.block(k).subject_id + "' has rank 0 and must be excluded");

  out.block_svds.resize(n);
  parallel_for(options.execution, static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t k) {
    const auto i = static_cast<std::size_t>(k);
    out.block_svds[i] = truncated_svd(data.block(i).values, ranks[i]);
  });

  const StackedSpectrum spectrum = stack_and_svd(out.block_svds);
  out.stacked_singvals = spectrum.singvals;

  std::vector<Matrix> blocks;
  blocks.reserve(n);
  for (const auto& b : data.blocks()) blocks.push_back(b.values);
  out.random_direction_threshold =
      random_direction_threshold(data.dim(), ranks, options.reps, seed, options.execution);
  out.wedin_threshold = wedin_threshold(blocks, out.block_svds, options.reps, seed, options.execution);

  if (options.joint_rank) {
    out.joint_rank = *options.joint_rank;
    out.joint_rank_overridden = true;
  } else {
    out.joint_rank = select_joint_rank(spectrum.singvals, out.random_direction_threshold, out.wedin_threshold);
  }
  const int min_rank = *std::min_element(ranks.begin(), ranks.end());
  if (out.joint_rank < 0 || out.joint_rank > min_rank)
    throw ConfigError("segment: joint rank " + std::to_string(out.joint_rank) +
                      " exceeds the smallest subject rank " + std::to_string(min_rank));

  out.joint_basis = spectrum.right_basis.leftCols(out.joint_rank);
  const Matrix projector = out.joint_projector();
  out.joint_blocks.resize(n);
  out.group_blocks.resize(n);
  parallel_for(options.execution, static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t k) {
    const auto i = static_cast<std::size_t>(k);
    const Matrix& x = blocks[i];
    const Matrix& v = out.block_svds[i].V;
    out.joint_blocks[i] = x * projector;
    out.group_blocks[i] = (x * v) * v.transpose() - out.joint_blocks[i];
  });
  return out;
}

}  // namespace gridy
