#pragma once

#include "gridy/types.hpp"

#include <vector>

namespace gridy {

/// Column j of `aligned` is signs[j] * estimate.col(permutation[j]).
struct Alignment {
  std::vector<int> permutation;
  std::vector<int> signs;
  Matrix aligned;
};

/// Column permutation and sign flips of `estimate` minimizing the squared
/// distance to `truth`. Exhaustive over permutations; at most 9 columns.
Alignment align_to_truth(const Matrix& estimate, const Matrix& truth);

/// Applies an alignment to the columns of a factor matrix.
Matrix align_columns(const Matrix& m, const Alignment& alignment);

/// Applies an alignment to a transition matrix acting on the aligned factors:
/// S Pi' M Pi S.
Matrix align_transition(const Matrix& m, const Alignment& alignment);

}  // namespace gridy
