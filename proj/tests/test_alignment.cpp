#include "gridy/alignment.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <numeric>

using namespace gridy;
using gridy::testing::random_gaussian;

TEST(Alignment, SwappedColumns) {
  const Matrix truth = random_gaussian(10, 2, 1);
  Matrix est(10, 2);
  est << truth.col(1), truth.col(0);
  const auto al = align_to_truth(est, truth);
  EXPECT_EQ(al.permutation, (std::vector<int>{1, 0}));
  EXPECT_EQ(al.signs, (std::vector<int>{1, 1}));
  EXPECT_LE((al.aligned - truth).norm(), 1e-14);
}

TEST(Alignment, FlippedColumns) {
  const Matrix truth = random_gaussian(10, 3, 2);
  const auto al = align_to_truth(-truth, truth);
  EXPECT_EQ(al.signs, (std::vector<int>{-1, -1, -1}));
  EXPECT_LE((al.aligned - truth).norm(), 1e-14);
}

TEST(Alignment, MatchesBruteForceOverAllSignedPermutations) {
  for (int c = 0; c < 20; ++c) {
    const Matrix truth = random_gaussian(8, 3, 100 + c);
    const Matrix est = random_gaussian(8, 3, 200 + c) + 0.5 * truth;
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> perm(3);
    std::iota(perm.begin(), perm.end(), 0);
    int candidates = 0;
    do {
      for (int mask = 0; mask < 8; ++mask) {
        Matrix cand(8, 3);
        for (int j = 0; j < 3; ++j) cand.col(j) = ((mask >> j) & 1 ? -1.0 : 1.0) * est.col(perm[j]);
        best = std::min(best, (cand - truth).squaredNorm());
        ++candidates;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    ASSERT_EQ(candidates, 48);
    EXPECT_NEAR((align_to_truth(est, truth).aligned - truth).squaredNorm(), best, 1e-12);
  }
}

TEST(Alignment, TransitionFollowsFactors) {
  const Matrix truth = random_gaussian(6, 3, 3);
  Matrix est(6, 3);
  est << -truth.col(2), truth.col(0), truth.col(1);
  const auto al = align_to_truth(est, truth);
  const Matrix f = random_gaussian(50, 3, 4);
  const Matrix psi = random_gaussian(3, 3, 5);
  // Factors g = f psi' evolve by psi; aligned factors must evolve by the aligned transition.
  const Matrix g = f * psi.transpose();
  const Matrix lhs = align_columns(g, al);
  const Matrix rhs = align_columns(f, al) * align_transition(psi, al).transpose();
  EXPECT_LE((lhs - rhs).norm(), 1e-12);
}
