#include "gridy/linalg.hpp"

#include "gridy/error.hpp"

#include <algorithm>
#include <cmath>

namespace gridy {

Svd thin_svd(const Matrix& x) {
  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

Svd leading_svd(const Matrix& x, Eigen::Index rank) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (rank < 0 || rank > std::min(n, p)) throw ConfigError("leading_svd: rank out of range");
  Svd out;
  if (rank == 0) {
    out.U = Matrix(n, 0);
    out.S = Vector(0);
    out.V = Matrix(p, 0);
    return out;
  }
  const bool wide = p > n;
  Matrix gram(wide ? n : p, wide ? n : p);
  if (wide)
    gram.noalias() = x * x.transpose();
  else
    gram.noalias() = x.transpose() * x;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  Matrix small = eig.eigenvectors().rightCols(rank).rowwise().reverse();
  Vector lambda = eig.eigenvalues().tail(rank).reverse();
  out.S = lambda.cwiseMax(0.0).cwiseSqrt();
  Matrix other = wide ? Matrix(x.transpose() * small) : Matrix(x * small);
  for (Eigen::Index j = 0; j < rank; ++j) {
    double s = out.S(j);
    if (s > 0.0) {
      other.col(j) /= s;
    }
  }
  // Re-orthonormalize the derived side; the Gram route loses a little orthogonality
  // for small singular values.
  Eigen::HouseholderQR<Matrix> qr(other);
  Matrix q = qr.householderQ() * Matrix::Identity(other.rows(), rank);
  for (Eigen::Index j = 0; j < rank; ++j) {
    if (q.col(j).dot(other.col(j)) < 0.0) q.col(j) = -q.col(j);
  }
  if (wide) {
    out.U = std::move(small);
    out.V = std::move(q);
  } else {
    out.V = std::move(small);
    out.U = std::move(q);
  }
  return out;
}

double spectral_norm(const Matrix& x) {
  if (x.size() == 0) return 0.0;
  const bool wide = x.cols() > x.rows();
  Matrix gram = wide ? Matrix(x * x.transpose()) : Matrix(x.transpose() * x);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, eig.eigenvalues()(gram.rows() - 1)));
}

double smallest_singular_value(const Matrix& x) {
  if (x.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(x);
  const Vector& s = svd.singularValues();
  return s(s.size() - 1);
}

double largest_angle_cosine(const Matrix& a, const Matrix& b) {
  Matrix cross = a.transpose() * b;
  // Singular values of a k x r matrix; the angle concerns the smaller subspace.
  Eigen::JacobiSVD<Matrix> svd(cross);
  const Vector& s = svd.singularValues();
  if (s.size() == 0) return 0.0;
  return s(s.size() - 1);
}

double largest_principal_angle(const Matrix& a, const Matrix& b) {
  const double c = std::clamp(largest_angle_cosine(a, b), 0.0, 1.0);
  if (c < std::sqrt(0.5)) return std::acos(c);
  // Near-aligned spans: the sine from the residual keeps full precision.
  const Matrix& small = a.cols() <= b.cols() ? a : b;
  const Matrix& large = a.cols() <= b.cols() ? b : a;
  const Matrix residual = small - large * (large.transpose() * small);
  Eigen::JacobiSVD<Matrix> svd(residual);
  const double s = svd.singularValues().size() == 0 ? 0.0 : svd.singularValues()(0);
  return std::asin(std::clamp(s, 0.0, 1.0));
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw ConfigError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return percentile(std::move(values), 50.0); }

Eigen::Index numerical_rank(const Matrix& x, double rel_tol) {
  if (x.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(x);
  const Vector& s = svd.singularValues();
  if (s(0) == 0.0) return 0;
  return (s.array() > rel_tol * s(0)).count();
}

Vector center_columns(Matrix& x) {
  Vector means = x.colwise().mean().transpose();
  x.rowwise() -= means.transpose();
  return means;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace gridy
