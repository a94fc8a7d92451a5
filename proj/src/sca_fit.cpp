#include "gridy/sca_fit.hpp"

#include "gridy/error.hpp"
#include "gridy/linalg.hpp"
#include "gridy/random.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gridy {

namespace {

/// P = U V' from the SVD of the T x r cross-product G = X B C A'.
Matrix procrustes_from_cross(const Matrix& cross) {
  Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

/// X = U core with U orthonormal; `tail` is the energy not captured by U.
struct CompressedBlock {
  Matrix basis;
  Matrix core;
  double tail = 0.0;
};

/// Every optimal rotation lies in the column space of its block, so the fit can
/// run on the (rank x d) coordinates instead of the full T x d block.
CompressedBlock compress(const Matrix& x, Eigen::Index rank) {
  const Svd svd = thin_svd(x);
  Eigen::Index keep = rank;
  const double top = svd.S.size() ? svd.S(0) : 0.0;
  for (Eigen::Index i = 0; i < svd.S.size(); ++i)
    if (svd.S(i) > 1e-13 * top) keep = std::max(keep, i + 1);
  CompressedBlock out;
  out.basis = svd.U.leftCols(keep);
  out.core = svd.S.head(keep).asDiagonal() * svd.V.leftCols(keep).transpose();
  out.tail = svd.S.tail(svd.S.size() - keep).squaredNorm();
  return out;
}

/// Solves X * gram = rhs for X with a symmetric, possibly singular gram.
Matrix right_solve(const Matrix& rhs, const Matrix& gram) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(gram);
  return cod.solve(rhs.transpose()).transpose();
}

struct Fit {
  Matrix B, A;
  std::vector<Matrix> P;  // in compressed coordinates
  std::vector<Vector> C;
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
};

double compressed_sse(const std::vector<CompressedBlock>& blocks, const Fit& fit) {
  double sse = 0.0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const Matrix model = fit.P[k] * fit.A * fit.C[k].asDiagonal() * fit.B.transpose();
    sse += blocks[k].tail + (blocks[k].core - model).squaredNorm();
  }
  return sse;
}

Fit run_start(const std::vector<CompressedBlock>& blocks, Matrix b_init, bool fix_core, const ScaOptions& options,
              double energy) {
  const Eigen::Index r = b_init.cols();
  const std::size_t n = blocks.size();
  Fit fit;
  fit.B = std::move(b_init);
  fit.A = Matrix::Identity(r, r);
  fit.C.assign(n, Vector::Ones(r));
  fit.P.resize(n);
  std::vector<Matrix> rotated(n);

  double previous = 0.0;
  Matrix last_B, last_A;
  std::vector<Vector> last_C;
  for (int it = 1; it <= options.max_iter; ++it) {
    for (std::size_t k = 0; k < n; ++k) {
      const Matrix cross = blocks[k].core * fit.B * fit.C[k].asDiagonal() * fit.A.transpose();
      fit.P[k] = procrustes_from_cross(cross);
      rotated[k] = fit.P[k].transpose() * blocks[k].core;  // r x d
    }

    if (!fix_core) {
      Matrix num = Matrix::Zero(r, r);
      Matrix den = Matrix::Zero(r, r);
      const Matrix btb = fit.B.transpose() * fit.B;
      for (std::size_t k = 0; k < n; ++k) {
        num += rotated[k] * fit.B * fit.C[k].asDiagonal();
        den += fit.C[k].asDiagonal() * btb * fit.C[k].asDiagonal();
      }
      fit.A = right_solve(num, den);
    }
    {
      Matrix num = Matrix::Zero(fit.B.rows(), r);
      Matrix den = Matrix::Zero(r, r);
      const Matrix ata = fit.A.transpose() * fit.A;
      for (std::size_t k = 0; k < n; ++k) {
        num += rotated[k].transpose() * fit.A * fit.C[k].asDiagonal();
        den += fit.C[k].asDiagonal() * ata * fit.C[k].asDiagonal();
      }
      fit.B = right_solve(num, den);
    }
    {
      const Matrix hadamard = (fit.A.transpose() * fit.A).cwiseProduct(fit.B.transpose() * fit.B);
      Eigen::CompleteOrthogonalDecomposition<Matrix> cod(hadamard);
      for (std::size_t k = 0; k < n; ++k) {
        const Vector rhs = (fit.A.transpose() * rotated[k] * fit.B).diagonal();
        fit.C[k] = cod.solve(rhs);
      }
    }

    double sse = compressed_sse(blocks, fit);
    if (it > 2 && std::isfinite(sse)) {
      // Line search along the last sweep's step; kept only when it lowers the objective.
      const double step = std::cbrt(static_cast<double>(it));
      Fit trial;
      trial.B = last_B + step * (fit.B - last_B);
      trial.A = fix_core ? fit.A : Matrix(last_A + step * (fit.A - last_A));
      trial.C.resize(n);
      trial.P.resize(n);
      for (std::size_t k = 0; k < n; ++k) {
        trial.C[k] = last_C[k] + step * (fit.C[k] - last_C[k]);
        trial.P[k] = procrustes_from_cross(blocks[k].core * trial.B * trial.C[k].asDiagonal() * trial.A.transpose());
      }
      const double trial_sse = compressed_sse(blocks, trial);
      if (trial_sse < sse) {
        fit.B = std::move(trial.B);
        fit.A = std::move(trial.A);
        fit.C = std::move(trial.C);
        fit.P = std::move(trial.P);
        sse = trial_sse;
      }
    }
    last_B = fit.B;
    last_A = fit.A;
    last_C = fit.C;
    if (!std::isfinite(sse))
      throw NumericalError("SCA fit: non-finite objective at iteration " + std::to_string(it));
    fit.trace.push_back(sse);
    fit.iterations = it;
    if (sse <= 1e-26 * energy || (it > 1 && (previous - sse) < options.tol * previous)) {
      fit.converged = true;
      break;
    }
    previous = sse;
  }
  return fit;
}

ScaModel fit_impl(std::span<const Matrix> blocks, Eigen::Index rank, const ScaOptions& options, std::uint64_t seed,
                  bool fix_core) {
  if (blocks.empty()) throw ConfigError("SCA fit: no blocks");
  if (rank < 1) throw ConfigError("SCA fit: rank must be >= 1");
  if (options.n_starts < 1 || options.max_iter < 1 || !(options.tol >= 0.0))
    throw ConfigError("SCA fit: invalid options");
  const Eigen::Index d = blocks.front().cols();
  for (const auto& x : blocks) {
    if (x.cols() != d) throw ConfigError("SCA fit: blocks disagree on d");
    if (rank > std::min(x.rows(), d))
      throw ConfigError("SCA fit: rank " + std::to_string(rank) + " exceeds min(T_k, d) = " +
                        std::to_string(std::min(x.rows(), d)));
  }

  std::vector<CompressedBlock> compressed(blocks.size());
  Matrix gram = Matrix::Zero(d, d);
  double energy = 0.0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    compressed[k] = compress(blocks[k], rank);
    gram.noalias() += compressed[k].core.transpose() * compressed[k].core;
    energy += blocks[k].squaredNorm();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Matrix b0 = eig.eigenvectors().rightCols(rank).rowwise().reverse();

  std::vector<Fit> fits(static_cast<std::size_t>(options.n_starts));
  parallel_for(options.execution, options.n_starts, [&](std::ptrdiff_t s) {
    Matrix init = b0;
    if (s > 0) {
      Rng rng = make_rng(seed, "start", static_cast<std::uint64_t>(s));
      init += standard_normal(d, rank, rng) * (0.5 / std::sqrt(static_cast<double>(d)));
    }
    fits[static_cast<std::size_t>(s)] = run_start(compressed, std::move(init), fix_core, options, energy);
  });

  std::size_t best = 0;
  for (std::size_t s = 1; s < fits.size(); ++s)
    if (fits[s].trace.back() < fits[best].trace.back()) best = s;

  Fit& win = fits[best];
  ScaModel model;
  model.B = std::move(win.B);
  model.A = std::move(win.A);
  model.C = std::move(win.C);
  model.P.resize(blocks.size());
  for (std::size_t k = 0; k < blocks.size(); ++k) model.P[k] = compressed[k].basis * win.P[k];
  model.sse_trace = std::move(win.trace);
  model.iterations = win.iterations;
  model.converged = win.converged;
  model.start = static_cast<int>(best);
  normalize_model(model);
  model.sse = model_sse(blocks, model);
  return model;
}

}  // namespace

Matrix procrustes_rotation(const Matrix& m) { return procrustes_from_cross(m.transpose()); }

ScaModel fit_pf2(std::span<const Matrix> blocks, Eigen::Index rank, const ScaOptions& options, std::uint64_t seed) {
  return fit_impl(blocks, rank, options, seed, false);
}

ScaModel fit_sca_ind(std::span<const Matrix> blocks, Eigen::Index rank, const ScaOptions& options,
                     std::uint64_t seed) {
  ScaModel model = fit_impl(blocks, rank, options, seed, true);
  model.Phi = Matrix::Identity(rank, rank);
  return model;
}

void normalize_model(ScaModel& model) {
  const Eigen::Index r = model.rank();
  for (Eigen::Index j = 0; j < r; ++j) {
    const double norm = model.B.col(j).norm();
    if (!(norm > 0.0)) throw NumericalError("SCA fit: loadings column " + std::to_string(j + 1) + " vanished");
    model.B.col(j) /= norm;
    for (auto& c : model.C) c(j) *= norm;
    Eigen::Index at = 0;
    model.B.col(j).cwiseAbs().maxCoeff(&at);
    if (model.B(at, j) < 0.0) {
      model.B.col(j) = -model.B.col(j);
      model.A.col(j) = -model.A.col(j);
    }
    const double scale = model.A.col(j).norm();
    if (!(scale > 0.0)) throw NumericalError("SCA fit: component " + std::to_string(j + 1) + " has zero scale");
    model.A.col(j) /= scale;
    for (auto& c : model.C) c(j) *= scale;
  }
  model.Phi = symmetrize(model.A.transpose() * model.A);
  model.Phi.diagonal().setOnes();
}

std::vector<Matrix> extract_factors(const ScaModel& model) {
  std::vector<Matrix> out;
  out.reserve(model.P.size());
  for (std::size_t k = 0; k < model.P.size(); ++k) out.push_back(model.P[k] * model.A * model.C[k].asDiagonal());
  return out;
}

double model_sse(std::span<const Matrix> blocks, const ScaModel& model) {
  const auto factors = extract_factors(model);
  double sse = 0.0;
  for (std::size_t k = 0; k < blocks.size(); ++k) sse += (blocks[k] - factors[k] * model.B.transpose()).squaredNorm();
  return sse;
}

}  // namespace gridy
