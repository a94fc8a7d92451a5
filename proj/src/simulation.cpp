#include "gridy/simulation.hpp"

#include "gridy/csv.hpp"
#include "gridy/error.hpp"
#include "gridy/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

namespace gridy {

void SimulationConfig::validate() const {
  if (d < 4) throw ConfigError("simulation: d must be at least 4");
  if (T < 2) throw ConfigError("simulation: T must be at least 2");
  if (K < 1) throw ConfigError("simulation: K must be at least 1");
  if (r_joint < 0 || r_group < 0 || r_joint + r_group < 1) throw ConfigError("simulation: invalid ranks");
  if (r_joint + r_group > std::min(d, T)) throw ConfigError("simulation: r_J + r_G exceeds min(d, T)");
  if (corr_type != 1 && corr_type != 2) throw ConfigError("simulation: correlation type must be 1 or 2");
  if (!(c > 0.0)) throw ConfigError("simulation: c must be positive");
  if (!(xi_variance() > 0.0)) throw ConfigError("simulation: sigma_xi must be positive");
  if (!(sigma_eps >= 0.0)) throw ConfigError("simulation: sigma_eps must be non-negative");
  if (burn_in < 0) throw ConfigError("simulation: burn_in must be non-negative");
  if (exact_cross_products && std::max(r_joint, r_group) > T) throw ConfigError("simulation: T too short");
}

Loadings gen_loadings(Eigen::Index d, Eigen::Index r_joint, Eigen::Index r_group, Rng& rng) {
  if (d < 4) throw ConfigError("gen_loadings: d must be at least 4");
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(d));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  std::shuffle(rows.begin(), rows.end(), rng);
  const Eigen::Index n_joint = d / 2;
  const Eigen::Index n_first = (d - n_joint) / 2;

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Loadings out;
  out.joint = Matrix::Zero(d, r_joint);
  out.group[0] = Matrix::Zero(d, r_group);
  out.group[1] = Matrix::Zero(d, r_group);
  for (Eigen::Index i = 0; i < d; ++i) {
    const Eigen::Index row = rows[static_cast<std::size_t>(i)];
    Matrix& target = i < n_joint ? out.joint : (i < n_joint + n_first ? out.group[0] : out.group[1]);
    for (Eigen::Index j = 0; j < target.cols(); ++j) {
      double v = unif(rng);
      while (v == 0.0) v = unif(rng);
      target(row, j) = v;
    }
  }
  return out;
}

Matrix factor_correlation(int type, Eigen::Index r) {
  if (r < 0) throw ConfigError("factor_correlation: negative rank");
  if (type == 2) return Matrix::Identity(r, r);
  if (type != 1) throw ConfigError("factor_correlation: type must be 1 or 2");
  if (r > 4) throw ConfigError("factor_correlation: type-1 correlations are defined only up to rank 4");
  static const double band[4] = {1.0, -0.6, 0.3, -0.1};
  Matrix phi(r, r);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < r; ++j) phi(i, j) = band[std::abs(i - j)];
  return phi;
}

Matrix solve_stationary_transition(const Matrix& phi, double sigma_xi) {
  if (phi.rows() != phi.cols()) throw ConfigError("solve_stationary_transition: Phi must be square");
  if (!(sigma_xi > 0.0)) throw ConfigError("solve_stationary_transition: sigma_xi must be positive");
  if (phi.rows() == 0) return Matrix(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(phi));
  const Vector& lambda = eig.eigenvalues();
  if (!(lambda.minCoeff() > sigma_xi))
    throw ConfigError("solve_stationary_transition: smallest eigenvalue of Phi (" +
                      std::to_string(lambda.minCoeff()) + ") must exceed sigma_xi (" + std::to_string(sigma_xi) + ")");
  const Vector shrink = ((lambda.array() - sigma_xi) / lambda.array()).sqrt();
  return symmetrize(eig.eigenvectors() * shrink.asDiagonal() * eig.eigenvectors().transpose());
}

Matrix simulate_var1(const Matrix& psi, double sigma_xi, Eigen::Index T, int burn_in, Rng& rng) {
  const Eigen::Index r = psi.rows();
  std::normal_distribution<double> normal(0.0, std::sqrt(sigma_xi));
  Matrix out(T, r);
  Vector state = Vector::Zero(r);
  Vector shock(r);
  for (Eigen::Index t = -burn_in; t < T; ++t) {
    for (Eigen::Index j = 0; j < r; ++j) shock(j) = normal(rng);
    state = psi * state + shock;
    if (t >= 0) out.row(t) = state.transpose();
  }
  return out;
}

namespace {

/// Same column space as `series` but with cross-product exactly T * phi.
Matrix with_exact_cross_product(const Matrix& series, const Matrix& phi) {
  const Eigen::Index r = series.cols();
  Eigen::HouseholderQR<Matrix> qr(series);
  const Matrix q = qr.householderQ() * Matrix::Identity(series.rows(), r);
  const Matrix root = Eigen::LLT<Matrix>(phi * static_cast<double>(series.rows())).matrixU();
  return q * root;
}

std::string subject_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "subject_%03zu", k + 1);
  return buf;
}

}  // namespace

SimulatedData simulate_dataset(const SimulationConfig& config) {
  config.validate();
  const double sxi = config.xi_variance();
  GroundTruth truth;
  truth.sigma_eps = config.sigma_eps;
  truth.Phi_joint = factor_correlation(config.corr_type, config.r_joint);
  truth.Phi_group = factor_correlation(config.corr_type, config.r_group);
  truth.Psi_joint = solve_stationary_transition(truth.Phi_joint, sxi);
  truth.Psi_group = solve_stationary_transition(truth.Phi_group, sxi);
  auto scales = [&](Eigen::Index r) {
    Vector v(r);
    for (Eigen::Index j = 0; j < r; ++j) v(j) = std::sqrt(config.c) * static_cast<double>(5 + j);
    return v;
  };
  truth.C_joint = scales(config.r_joint);
  truth.C_group = scales(config.r_group);

  Rng loadings_rng = make_rng(config.seed, "loadings");
  Loadings b = gen_loadings(config.d, config.r_joint, config.r_group, loadings_rng);
  truth.B_joint = std::move(b.joint);
  truth.B_group = std::move(b.group);

  const std::size_t n = 2 * config.K;
  std::vector<TimeSeriesBlock> blocks(n);
  truth.F_joint.resize(n);
  truth.F_group.resize(n);
  const double noise_sd = std::sqrt(config.sigma_eps);
  for (std::size_t k = 0; k < n; ++k) {
    const Group g = k < config.K ? Group::first : Group::second;
    Rng factor_rng = make_rng(config.seed, "factors", k);
    Matrix a_joint = simulate_var1(truth.Psi_joint, sxi, config.T, config.burn_in, factor_rng);
    Matrix a_group = simulate_var1(truth.Psi_group, sxi, config.T, config.burn_in, factor_rng);
    if (config.exact_cross_products) {
      if (config.r_joint > 0) a_joint = with_exact_cross_product(a_joint, truth.Phi_joint);
      if (config.r_group > 0) a_group = with_exact_cross_product(a_group, truth.Phi_group);
    }
    truth.F_joint[k] = a_joint * truth.C_joint.asDiagonal();
    truth.F_group[k] = a_group * truth.C_group.asDiagonal();

    Rng noise_rng = make_rng(config.seed, "noise", k);
    Matrix x = truth.joint_block(k) + truth.group_block(k, g);
    if (noise_sd > 0.0) x += noise_sd * standard_normal(config.T, config.d, noise_rng);
    blocks[k] = {subject_name(k), std::move(x), g};
  }
  return {MultiBlockDataset(std::move(blocks), default_names(config.d, "v")), std::move(truth)};
}

double snr_value(const GroundTruth& truth) {
  const Eigen::Index d = truth.B_joint.rows();
  const double noise = truth.sigma_eps * std::sqrt(static_cast<double>(d));
  if (!(noise > 0.0)) return INFINITY;
  const Matrix joint = truth.B_joint * truth.C_joint.asDiagonal() * truth.Phi_joint * truth.C_joint.asDiagonal() *
                       truth.B_joint.transpose();
  double total = 0.0;
  for (int g = 0; g < 2; ++g) {
    const Matrix& bg = truth.B_group[static_cast<std::size_t>(g)];
    const Matrix signal =
        joint + bg * truth.C_group.asDiagonal() * truth.Phi_group * truth.C_group.asDiagonal() * bg.transpose();
    total += signal.norm();
  }
  return total / (2.0 * noise);
}

}  // namespace gridy
