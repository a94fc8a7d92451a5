#include "gridy/error.hpp"
#include "gridy/linalg.hpp"
#include "gridy/parallel.hpp"
#include "gridy/random.hpp"
#include "test_util.hpp"

#include <atomic>
#include <cstdlib>

using namespace gridy;

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(Execution::parallel, 1000, [&](std::ptrdiff_t i) { hits[static_cast<std::size_t>(i)]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsWorkerExceptions) {
  EXPECT_THROW(parallel_for(Execution::parallel, 100,
                            [](std::ptrdiff_t i) {
                              if (i == 37) throw NumericalError("boom");
                            }),
               NumericalError);
}

TEST(ThreadCap, ExplicitAndEnvironment) {
  set_thread_cap(2);
  EXPECT_EQ(thread_cap(), 2);
  setenv("GRIDY_THREADS", "3", 1);
  EXPECT_EQ(thread_cap_from_env(), 3);
  setenv("GRIDY_THREADS", "abc", 1);
  EXPECT_EQ(thread_cap_from_env(), 0);
  unsetenv("GRIDY_THREADS");
  set_thread_cap(0);
  EXPECT_GE(thread_cap(), 1);
}

TEST(Random, StreamsAreReproducibleAndDistinct) {
  Rng a = make_rng(1, "x", 0), b = make_rng(1, "x", 0), c = make_rng(1, "x", 1), d = make_rng(1, "y", 0);
  const auto va = a();
  EXPECT_EQ(va, b());
  EXPECT_NE(va, c());
  EXPECT_NE(va, d());
  EXPECT_NE(derive_seed(1, "x"), derive_seed(2, "x"));
}

TEST(Random, HaarAndComplementBases) {
  Rng rng = make_rng(3, "haar");
  const Matrix q = haar_orthonormal(12, 4, rng);
  EXPECT_LE((q.transpose() * q - Matrix::Identity(4, 4)).norm(), 1e-12);
  const Matrix p = complement_orthonormal(q, 5, rng);
  EXPECT_LE((p.transpose() * p - Matrix::Identity(5, 5)).norm(), 1e-12);
  EXPECT_LE((q.transpose() * p).norm(), 1e-12);
}

TEST(Linalg, PercentileIsLinearInterpolation) {
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4, 5}, 50), 3.0);
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4}, 50), 2.5);
  EXPECT_DOUBLE_EQ(percentile({10, 0}, 5), 0.5);
  EXPECT_DOUBLE_EQ(percentile({7}, 95), 7.0);
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
}

TEST(Linalg, LeadingSvdMatchesFullSvd) {
  const Matrix x = gridy::testing::random_gaussian(40, 15, 9);
  const Svd full = thin_svd(x);
  const Svd lead = leading_svd(x, 4);
  EXPECT_LE((full.S.head(4) - lead.S).norm(), 1e-10);
  EXPECT_LT(largest_principal_angle(full.V.leftCols(4), lead.V), 1e-8);
  EXPECT_EQ(numerical_rank(full.U.leftCols(3) * full.V.leftCols(3).transpose()), 3);
}
