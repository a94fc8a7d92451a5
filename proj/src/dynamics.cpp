#include "gridy/dynamics.hpp"

#include "gridy/error.hpp"
#include "gridy/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <string>

namespace gridy {

namespace {

Matrix hcat(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

/// (B'B)^{-1} B' with a rank check.
Matrix left_inverse(const Matrix& b, const char* what) {
  if (b.cols() == 0) return Matrix(0, b.rows());
  Eigen::ColPivHouseholderQR<Matrix> qr(b);
  qr.setThreshold(1e-10);
  if (qr.rank() < b.cols())
    throw NumericalError(std::string(what) + ": loadings matrix is rank-deficient (rank " +
                         std::to_string(qr.rank()) + " < " + std::to_string(b.cols()) + ")");
  const Matrix gram = b.transpose() * b;
  return gram.ldlt().solve(b.transpose());
}

}  // namespace

RefitFactors refit_factors(const Matrix& x, const Matrix& b_joint, const Matrix& b_group) {
  if (b_joint.rows() != x.cols() || b_group.rows() != x.cols())
    throw ConfigError("refit_factors: loadings and data disagree on d");
  const Matrix b = hcat(b_joint, b_group);
  const Matrix f = x * left_inverse(b, "refit_factors").transpose();
  return {f.leftCols(b_joint.cols()), f.rightCols(b_group.cols())};
}

Matrix autocovariance(const Matrix& f, Eigen::Index lag) {
  const Eigen::Index T = f.rows();
  if (lag < 0 || lag >= T) throw ConfigError("autocovariance: lag out of range");
  return f.bottomRows(T - lag).transpose() * f.topRows(T - lag) / static_cast<double>(T);
}

double companion_spectral_radius(const std::vector<Matrix>& psi) {
  if (psi.empty()) return 0.0;
  const Eigen::Index r = psi.front().rows();
  const auto p = static_cast<Eigen::Index>(psi.size());
  Matrix companion = Matrix::Zero(r * p, r * p);
  for (Eigen::Index i = 0; i < p; ++i) companion.block(0, i * r, r, r) = psi[static_cast<std::size_t>(i)];
  if (p > 1) companion.block(r, 0, r * (p - 1), r * (p - 1)).setIdentity();
  Eigen::EigenSolver<Matrix> eig(companion, false);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

VarFit yule_walker_from_autocovariances(const std::vector<Matrix>& gamma, int order) {
  if (order < 1) throw ConfigError("yule_walker: order must be >= 1");
  if (static_cast<int>(gamma.size()) < order + 1) throw ConfigError("yule_walker: need autocovariances up to the order");
  const Eigen::Index r = gamma.front().rows();
  if (r == 0) throw ConfigError("yule_walker: empty factor series");
  const Eigen::Index p = order;
  auto lagged = [&](Eigen::Index h) -> Matrix {
    return h >= 0 ? gamma[static_cast<std::size_t>(h)] : Matrix(gamma[static_cast<std::size_t>(-h)].transpose());
  };
  Matrix toeplitz(r * p, r * p);
  Matrix rhs(r, r * p);
  for (Eigen::Index i = 0; i < p; ++i) {
    rhs.middleCols(i * r, r) = lagged(i + 1);
    for (Eigen::Index h = 0; h < p; ++h) toeplitz.block(i * r, h * r, r, r) = lagged(h - i);
  }
  Eigen::JacobiSVD<Matrix> svd(toeplitz);
  const Vector& s = svd.singularValues();
  const double cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : INFINITY;
  if (!(cond < 1e12)) {
    std::ostringstream msg;
    msg << "yule_walker: singular autocovariance system (condition number " << cond << ")";
    throw NumericalError(msg.str());
  }
  // rhs = Psi * toeplitz  <=>  toeplitz' Psi' = rhs'
  const Matrix psi = toeplitz.transpose().partialPivLu().solve(rhs.transpose()).transpose();

  VarFit out;
  Matrix sigma = gamma.front();
  for (Eigen::Index i = 0; i < p; ++i) {
    out.Psi.push_back(psi.middleCols(i * r, r));
    sigma -= out.Psi.back() * lagged(i + 1).transpose();
  }
  out.Sigma_eta = symmetrize(sigma);
  out.spectral_radius = companion_spectral_radius(out.Psi);
  return out;
}

VarFit yule_walker(const Matrix& f, int order) {
  if (order < 1) throw ConfigError("yule_walker: order must be >= 1");
  if (f.rows() <= order * f.cols())
    throw ConfigError("yule_walker: series too short for the requested order");
  Matrix centered = f;
  center_columns(centered);
  std::vector<Matrix> gamma;
  for (int h = 0; h <= order; ++h) gamma.push_back(autocovariance(centered, h));
  return yule_walker_from_autocovariances(gamma, order);
}

VarNetwork build_network(const Matrix& b_joint, const Matrix& b_group, const Matrix& psi_joint,
                         const Matrix& psi_group, const Matrix& sigma_e, const Matrix& sigma_eta_joint,
                         const Matrix& sigma_eta_group, NoiseCovarianceMode mode) {
  const Eigen::Index d = b_joint.rows();
  VarNetwork net;
  net.theta_joint = b_joint * psi_joint * left_inverse(b_joint, "build_network");
  net.theta_group = b_group * psi_group * left_inverse(b_group, "build_network");
  const Matrix theta = net.directed();
  const Matrix innovations =
      b_joint * sigma_eta_joint * b_joint.transpose() + b_group * sigma_eta_group * b_group.transpose();
  if (mode == NoiseCovarianceMode::paper)
    net.sigma_zeta = theta * (Matrix::Identity(d, d) + sigma_e) + innovations;
  else
    net.sigma_zeta = sigma_e + theta * sigma_e * theta.transpose() + innovations;
  return net;
}

VariableR2 r2_per_variable(const Matrix& x, const Vector& factor) {
  if (x.rows() != factor.size()) throw ConfigError("r2_per_variable: length mismatch");
  VariableR2 out;
  out.r2 = Vector::Zero(x.cols());
  out.zero_variance.assign(static_cast<std::size_t>(x.cols()), false);
  const Vector fc = factor.array() - factor.mean();
  const double sff = fc.squaredNorm();
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const Vector xc = x.col(i).array() - x.col(i).mean();
    const double sxx = xc.squaredNorm();
    if (!(sxx > 0.0)) {
      out.zero_variance[static_cast<std::size_t>(i)] = true;
      continue;
    }
    if (!(sff > 0.0)) continue;
    const double sxf = xc.dot(fc);
    out.r2(i) = sxf * sxf / (sxx * sff);
  }
  return out;
}

std::vector<SubjectDynamics> estimate_dynamics(const std::vector<Matrix>& blocks, const Matrix& b_joint,
                                               const std::vector<Matrix>& group_loadings, int order,
                                               Execution exec) {
  if (blocks.size() != group_loadings.size()) throw ConfigError("estimate_dynamics: one group loadings per block");
  std::vector<SubjectDynamics> out(blocks.size());
  parallel_for(exec, static_cast<std::ptrdiff_t>(blocks.size()), [&](std::ptrdiff_t k) {
    const auto i = static_cast<std::size_t>(k);
    auto& s = out[i];
    const Matrix& x = blocks[i];
    s.factors = refit_factors(x, b_joint, group_loadings[i]);
    if (b_joint.cols() > 0) s.joint = yule_walker(s.factors.joint, order);
    if (group_loadings[i].cols() > 0) s.group = yule_walker(s.factors.group, order);
    const Matrix residual =
        x - s.factors.joint * b_joint.transpose() - s.factors.group * group_loadings[i].transpose();
    s.refit_sse = residual.squaredNorm();
    Matrix centered = residual;
    center_columns(centered);
    s.sigma_e = (centered.colwise().squaredNorm() / static_cast<double>(x.rows())).asDiagonal();
  });
  return out;
}

}  // namespace gridy
