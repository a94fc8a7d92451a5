#include "gridy/rank_selection.hpp"

#include "gridy/error.hpp"
#include "gridy/marchenko_pastur.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace gridy {

double optimal_shrinker(double a, double beta) {
  const double sb = std::sqrt(beta);
  if (a < 1.0 + sb) return 0.0;
  const double base = a * a - beta - 1.0;
  // Factored so the discriminant vanishes exactly at the bulk edge.
  const double disc = std::max(0.0, (a - 1.0 - sb) * (a + 1.0 + sb) * (base + 2.0 * sb));
  return std::sqrt(0.5 * (base + std::sqrt(disc)));
}

ShrinkageResult shrink_singular_values(const Vector& singvals, double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("shrink_singular_values: beta must lie in (0, 1]");
  if (singvals.size() == 0) throw ConfigError("shrink_singular_values: no singular values");
  for (Eigen::Index i = 1; i < singvals.size(); ++i)
    if (singvals(i) > singvals(i - 1)) throw ConfigError("shrink_singular_values: input must be non-increasing");

  ShrinkageResult out;
  out.beta = beta;
  out.median_singular_value = median(std::vector<double>(singvals.data(), singvals.data() + singvals.size()));
  if (!(out.median_singular_value > 0.0))
    throw NumericalError("degenerate input: median singular value is zero, noise scale undefined");
  out.kappa = out.median_singular_value / std::sqrt(mp_quantile(beta, 0.5));
  out.shrunk.resize(singvals.size());
  for (Eigen::Index i = 0; i < singvals.size(); ++i)
    out.shrunk(i) = out.kappa * optimal_shrinker(singvals(i) / out.kappa, beta);
  out.max_rank = (out.shrunk.array() > 0.0).count();
  return out;
}

Matrix impute_noise(const Svd& svd, const ShrinkageResult& shrink, Rng& rng) {
  Vector values = svd.S;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto law = marchenko_pastur(shrink.beta);
  for (Eigen::Index i = 0; i < shrink.max_rank; ++i) values(i) = shrink.kappa * law->quantile(unif(rng));
  return svd.U * values.asDiagonal() * svd.V.transpose();
}

namespace {

/// Bootstrap replicate in the orientation rows >= cols. `left` is the
/// rows-side random basis, `right` the cols-side basis.
void replicate_angles(const Matrix& noise, const Matrix& noise_gram, const Vector& signal, const Matrix& left,
                      const Matrix& right, std::vector<double>& angles_left, std::vector<double>& angles_right) {
  const Eigen::Index rank = signal.size();
  const Matrix w = left.transpose() * noise;  // rank x p
  const Matrix vs = right * signal.asDiagonal();
  Matrix gram = noise_gram;
  gram.noalias() += vs * w;
  gram.noalias() += w.transpose() * vs.transpose();
  gram.noalias() += vs * vs.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Matrix vhat = eig.eigenvectors().rightCols(rank).rowwise().reverse();
  const Vector sigma = eig.eigenvalues().tail(rank).reverse().cwiseMax(0.0).cwiseSqrt();

  Matrix uhat = left * (signal.asDiagonal() * (right.transpose() * vhat)) + noise * vhat;
  for (Eigen::Index j = 0; j < rank; ++j)
    if (sigma(j) > 0.0) uhat.col(j) /= sigma(j);
  Eigen::HouseholderQR<Matrix> qr(uhat);
  Matrix q = qr.householderQ() * Matrix::Identity(uhat.rows(), rank);

  angles_left.resize(static_cast<std::size_t>(rank));
  angles_right.resize(static_cast<std::size_t>(rank));
  for (Eigen::Index r = 1; r <= rank; ++r) {
    angles_left[static_cast<std::size_t>(r - 1)] = largest_principal_angle(left, q.leftCols(r));
    angles_right[static_cast<std::size_t>(r - 1)] = largest_principal_angle(right, vhat.leftCols(r));
  }
}

}  // namespace

BootstrapResult rotational_bootstrap(const Matrix& x, const BootstrapOptions& options, std::uint64_t seed) {
  if (options.reps < 1) throw ConfigError("rotational_bootstrap: reps must be >= 1");
  if (!(options.xi > 0.0 && options.xi <= 1.0)) throw ConfigError("rotational_bootstrap: xi must lie in (0, 1]");
  if (x.rows() < 1 || x.cols() < 1) throw ConfigError("rotational_bootstrap: empty block");

  const Eigen::Index T = x.rows();
  const Eigen::Index d = x.cols();
  // Work with rows >= cols; the time side is "left" unless the block is wide.
  const bool wide = d > T;
  const Matrix xt = wide ? Matrix(x.transpose()) : x;
  const Svd svd = thin_svd(xt);
  const double beta = static_cast<double>(std::min(T, d)) / static_cast<double>(std::max(T, d));

  BootstrapResult result;
  auto& diag = result.diagnostics;
  diag.shrinkage = shrink_singular_values(svd.S, beta);
  const Eigen::Index rmax = diag.shrinkage.max_rank;
  if (rmax == 0) {
    diag.degenerate = true;
    return result;
  }

  Rng impute_rng = make_rng(seed, "impute", 0);
  const Matrix noise = impute_noise(svd, diag.shrinkage, impute_rng);
  const Matrix noise_gram = noise.transpose() * noise;
  const Vector signal = diag.shrinkage.shrunk.head(rmax);

  const auto L = static_cast<std::size_t>(options.reps);
  const auto R = static_cast<std::size_t>(rmax);
  std::vector<std::vector<double>> angles_time(L), angles_var(L);
  parallel_for(options.execution, static_cast<std::ptrdiff_t>(L), [&](std::ptrdiff_t l) {
    Rng rng = make_rng(seed, "bootstrap", static_cast<std::uint64_t>(l));
    const Matrix u_time = haar_orthonormal(T, rmax, rng);
    const Matrix v_var = haar_orthonormal(d, rmax, rng);
    auto& at = angles_time[static_cast<std::size_t>(l)];
    auto& av = angles_var[static_cast<std::size_t>(l)];
    if (wide)
      replicate_angles(noise, noise_gram, signal, v_var, u_time, av, at);
    else
      replicate_angles(noise, noise_gram, signal, u_time, v_var, at, av);
  });

  // Random-direction bounds, pooled over r = 1..rmax and all replications.
  std::vector<std::vector<double>> random_time(L), random_var(L);
  parallel_for(options.execution, static_cast<std::ptrdiff_t>(L), [&](std::ptrdiff_t m) {
    Rng rng = make_rng(seed, "direction", static_cast<std::uint64_t>(m));
    auto& rt = random_time[static_cast<std::size_t>(m)];
    auto& rv = random_var[static_cast<std::size_t>(m)];
    const Matrix ut = haar_orthonormal(T, rmax, rng);
    for (Eigen::Index r = 1; r <= rmax; ++r) rt.push_back(largest_principal_angle(ut, haar_orthonormal(T, r, rng)));
    const Matrix vd = haar_orthonormal(d, rmax, rng);
    for (Eigen::Index r = 1; r <= rmax; ++r) rv.push_back(largest_principal_angle(vd, haar_orthonormal(d, r, rng)));
  });
  std::vector<double> pooled_time, pooled_var;
  for (std::size_t m = 0; m < L; ++m) {
    pooled_time.insert(pooled_time.end(), random_time[m].begin(), random_time[m].end());
    pooled_var.insert(pooled_var.end(), random_var[m].begin(), random_var[m].end());
  }
  diag.theta0_u = percentile(pooled_time, 5.0);
  diag.theta0_v = percentile(pooled_var, 5.0);

  diag.angle95_u.resize(R);
  diag.angle95_v.resize(R);
  std::vector<double> column(L);
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t l = 0; l < L; ++l) column[l] = angles_time[l][r];
    diag.angle95_u[r] = percentile(column, 95.0);
    for (std::size_t l = 0; l < L; ++l) column[l] = angles_var[l][r];
    diag.angle95_v[r] = percentile(column, 95.0);
    if (diag.angle95_u[r] < options.xi * diag.theta0_u) ++diag.count_u;
    if (diag.angle95_v[r] < options.xi * diag.theta0_v) ++diag.count_v;
  }
  result.rank = std::min(diag.count_u, diag.count_v);
  return result;
}

int majority_vote(std::span<const int> ranks) {
  if (ranks.empty()) throw ConfigError("majority_vote: empty rank list");
  std::map<int, int> counts;
  for (int r : ranks) ++counts[r];
  int best = counts.begin()->first;
  int best_count = 0;
  for (const auto& [rank, count] : counts) {
    if (count > best_count) {  // ascending keys, so ties keep the smallest mode
      best = rank;
      best_count = count;
    }
  }
  return best;
}

std::vector<int> RankReport::ranks() const {
  std::vector<int> out;
  out.reserve(subjects.size());
  for (const auto& s : subjects) out.push_back(s.rank);
  return out;
}

RankReport select_ranks(const MultiBlockDataset& data, const BootstrapOptions& options, std::uint64_t seed) {
  RankReport report;
  report.xi = options.xi;
  report.reps = options.reps;
  report.seed = seed;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto& block = data.block(k);
    auto res = rotational_bootstrap(block.values, options, derive_seed(seed, "rank", k));
    report.subjects.push_back({block.subject_id, block.group, res.rank, std::move(res.diagnostics)});
  }
  const auto ranks = report.ranks();
  report.voted_rank = majority_vote(ranks);
  return report;
}

}  // namespace gridy
