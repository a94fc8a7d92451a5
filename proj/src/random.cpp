#include "gridy/random.hpp"

#include "gridy/error.hpp"

#include <array>

namespace gridy {

namespace {

constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::seed_seq make_seed_seq(std::uint64_t master, std::string_view stream, std::uint64_t index) {
  const std::uint64_t tag = fnv1a(stream);
  std::array<std::uint32_t, 6> words{
      static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
      static_cast<std::uint32_t>(tag),    static_cast<std::uint32_t>(tag >> 32),
      static_cast<std::uint32_t>(index),  static_cast<std::uint32_t>(index >> 32)};
  return std::seed_seq(words.begin(), words.end());
}

Matrix orthonormalize(Matrix g) {
  const Eigen::Index k = g.cols();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(g.rows(), k);
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

}  // namespace

Rng make_rng(std::uint64_t master, std::string_view stream, std::uint64_t index) {
  auto seq = make_seed_seq(master, stream, index);
  return Rng(seq);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index) {
  Rng rng = make_rng(master, stream, index);
  return rng();
}

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  // Column-major fill order is part of the reproducibility contract.
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

Matrix haar_orthonormal(Eigen::Index n, Eigen::Index k, Rng& rng) {
  if (k < 0 || k > n) throw ConfigError("haar_orthonormal: need 0 <= k <= n");
  if (k == 0) return Matrix(n, 0);
  return orthonormalize(standard_normal(n, k, rng));
}

Matrix complement_orthonormal(const Matrix& basis, Eigen::Index k, Rng& rng) {
  const Eigen::Index n = basis.rows();
  if (k < 0 || k > n - basis.cols())
    throw ConfigError("complement_orthonormal: requested dimension exceeds the complement");
  if (k == 0) return Matrix(n, 0);
  Matrix g = standard_normal(n, k, rng);
  // Two projection passes keep the result orthogonal to `basis` at machine precision.
  for (int pass = 0; pass < 2; ++pass) g -= basis * (basis.transpose() * g);
  Matrix q = orthonormalize(std::move(g));
  q -= basis * (basis.transpose() * q);
  return orthonormalize(std::move(q));
}

}  // namespace gridy
