#include "gridy/alignment.hpp"

#include "gridy/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gridy {

Alignment align_to_truth(const Matrix& estimate, const Matrix& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
    throw ConfigError("align_to_truth: shape mismatch");
  const Eigen::Index r = truth.cols();
  if (r > 9) throw ConfigError("align_to_truth: exhaustive search supports at most 9 columns");

  // For a fixed permutation the best signs follow the inner products, so the
  // squared error is minimized by maximizing the sum of |<truth_j, est_p(j)>|.
  const Matrix inner = truth.transpose() * estimate;
  std::vector<int> perm(static_cast<std::size_t>(r));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_score = -1.0;
  do {
    double score = 0.0;
    for (Eigen::Index j = 0; j < r; ++j) score += std::abs(inner(j, perm[static_cast<std::size_t>(j)]));
    if (score > best_score) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  Alignment out;
  out.permutation = best;
  out.signs.resize(static_cast<std::size_t>(r));
  for (Eigen::Index j = 0; j < r; ++j)
    out.signs[static_cast<std::size_t>(j)] = inner(j, best[static_cast<std::size_t>(j)]) < 0.0 ? -1 : 1;
  out.aligned = align_columns(estimate, out);
  return out;
}

Matrix align_columns(const Matrix& m, const Alignment& alignment) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(alignment.permutation.size()));
  for (std::size_t j = 0; j < alignment.permutation.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) = alignment.signs[j] * m.col(alignment.permutation[j]);
  return out;
}

Matrix align_transition(const Matrix& m, const Alignment& alignment) {
  const auto r = static_cast<Eigen::Index>(alignment.permutation.size());
  Matrix out(r, r);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < r; ++j) {
      const auto pi = static_cast<std::size_t>(i);
      const auto pj = static_cast<std::size_t>(j);
      out(i, j) = alignment.signs[pi] * alignment.signs[pj] * m(alignment.permutation[pi], alignment.permutation[pj]);
    }
  return out;
}

}  // namespace gridy
