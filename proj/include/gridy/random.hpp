#pragma once

#include "gridy/types.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace gridy {

using Rng = std::mt19937_64;

/// Derives an independent generator for (master seed, named stream, index).
/// Every replicate, subject or stage gets its own sub-stream so that serial and
/// parallel schedules consume identical random numbers.
Rng make_rng(std::uint64_t master, std::string_view stream, std::uint64_t index = 0);

/// Derives a child seed in the same way as make_rng, for handing to a nested stage.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0);

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Haar-distributed n x k matrix with orthonormal columns: QR of a Gaussian
/// matrix with the R diagonal forced positive.
Matrix haar_orthonormal(Eigen::Index n, Eigen::Index k, Rng& rng);

/// Haar-distributed orthonormal k columns inside the orthogonal complement of
/// span(basis). `basis` must have orthonormal columns and k <= n - basis.cols().
Matrix complement_orthonormal(const Matrix& basis, Eigen::Index k, Rng& rng);

}  // namespace gridy
