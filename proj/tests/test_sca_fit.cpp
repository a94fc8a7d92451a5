#include "gridy/alignment.hpp"
#include "gridy/error.hpp"
#include "gridy/linalg.hpp"
#include "gridy/measures.hpp"
#include "gridy/sca_fit.hpp"
#include "gridy/simulation.hpp"
#include "test_util.hpp"

using namespace gridy;
using gridy::testing::random_gaussian;
using gridy::testing::random_orthonormal;

namespace {

struct Pf2Truth {
  std::vector<Matrix> blocks;
  Matrix B;
  Matrix Phi;
};

/// Noiseless X_k = P_k A C_k B' with varying positive C_k.
Pf2Truth pf2_instance(Eigen::Index d, Eigen::Index T, Eigen::Index r, int n, std::uint64_t seed, bool identity_core) {
  Pf2Truth t;
  t.B = random_gaussian(d, r, seed);
  Matrix a = Matrix::Identity(r, r);
  if (!identity_core) a = random_orthonormal(r, r, seed + 1) + 0.5 * random_gaussian(r, r, seed + 2);
  Rng rng = make_rng(seed, "scales");
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  for (int k = 0; k < n; ++k) {
    Vector c(r);
    for (Eigen::Index j = 0; j < r; ++j) c(j) = unif(rng);
    const Matrix p = random_orthonormal(T, r, seed + 10 + static_cast<std::uint64_t>(k));
    t.blocks.push_back(p * a * c.asDiagonal() * t.B.transpose());
  }
  t.Phi = a.transpose() * a;
  return t;
}

double energy(const std::vector<Matrix>& blocks) {
  double e = 0.0;
  for (const auto& b : blocks) e += b.squaredNorm();
  return e;
}

double min_abs_column_congruence(const Matrix& truth, const Matrix& estimate) {
  const auto al = align_to_truth(estimate, truth);
  double worst = 1.0;
  for (Eigen::Index j = 0; j < truth.cols(); ++j)
    worst = std::min(worst, std::abs(congruence(truth.col(j), al.aligned.col(j))));
  return worst;
}

ScaOptions long_run() {
  ScaOptions o;
  o.tol = 0.0;
  o.max_iter = 50000;
  return o;
}

}  // namespace

TEST(Procrustes, IdentityAndSignedDiagonal) {
  EXPECT_LE((procrustes_rotation(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).norm(), 1e-12);
  Matrix m(2, 2);
  m << 2, 0, 0, -3;
  const Matrix p = procrustes_rotation(m);
  Matrix expected(2, 2);
  expected << 1, 0, 0, -1;
  EXPECT_LE((p - expected).norm(), 1e-12);
  EXPECT_NEAR((m * p).trace(), 5.0, 1e-12);
}

TEST(Procrustes, ObjectiveEqualsNuclearNorm) {
  for (int i = 0; i < 20; ++i) {
    const Matrix m = random_gaussian(3, 9, 100 + i);
    const Matrix p = procrustes_rotation(m);
    ASSERT_EQ(p.rows(), 9);
    ASSERT_EQ(p.cols(), 3);
    EXPECT_LE((p.transpose() * p - Matrix::Identity(3, 3)).norm(), 1e-12);
    EXPECT_NEAR((m * p).trace(), thin_svd(m).S.sum(), 1e-8);
  }
}

TEST(Procrustes, BeatsRandomOrthonormalCandidates) {
  const Matrix m = random_gaussian(3, 7, 200);
  const double best = (m * procrustes_rotation(m)).trace();
  Rng rng = make_rng(5, "candidates");
  for (int i = 0; i < 1000; ++i) EXPECT_GE(best, (m * haar_orthonormal(7, 3, rng)).trace() - 1e-12);
}

TEST(FitPf2, NoiselessRecovery) {
  const auto t = pf2_instance(20, 50, 3, 6, 1, false);
  ScaOptions o;
  o.execution = Execution::serial;
  const auto model = fit_pf2(t.blocks, 3, o, 9);
  EXPECT_LE(model.sse, 1e-6 * energy(t.blocks));
  EXPECT_GE(min_abs_column_congruence(t.B, model.B), 0.999);
}

TEST(FitPf2, ObjectiveIsNonIncreasing) {
  auto t = pf2_instance(15, 40, 3, 5, 2, false);
  for (std::size_t k = 0; k < t.blocks.size(); ++k)
    t.blocks[k] += 0.3 * random_gaussian(40, 15, 300 + k);
  ScaOptions o;
  o.tol = 1e-12;
  o.n_starts = 3;
  const auto model = fit_pf2(t.blocks, 3, o, 4);
  ASSERT_GE(model.sse_trace.size(), 2u);
  for (std::size_t i = 1; i < model.sse_trace.size(); ++i)
    EXPECT_LE(model.sse_trace[i], model.sse_trace[i - 1] * (1.0 + 1e-12));
  EXPECT_NEAR(model.sse, model_sse(t.blocks, model), 1e-8 * energy(t.blocks));
}

TEST(FitPf2, DifferentSeedsAgreeOnNoiselessData) {
  const auto t = pf2_instance(25, 60, 3, 5, 3, false);
  const auto a = fit_pf2(t.blocks, 3, long_run(), 1);
  const auto b = fit_pf2(t.blocks, 3, long_run(), 2);
  EXPECT_GE(min_abs_column_congruence(a.B, b.B), 0.999);
}

TEST(FitPf2, NormalizationConventions) {
  auto t = pf2_instance(12, 30, 2, 4, 4, false);
  const auto model = fit_pf2(t.blocks, 2, long_run(), 1);
  for (Eigen::Index j = 0; j < 2; ++j) {
    EXPECT_NEAR(model.B.col(j).norm(), 1.0, 1e-12);
    Eigen::Index at = 0;
    model.B.col(j).cwiseAbs().maxCoeff(&at);
    EXPECT_GT(model.B(at, j), 0.0);
    EXPECT_NEAR(model.Phi(j, j), 1.0, 1e-12);
  }
  EXPECT_LE((model.Phi - model.Phi.transpose()).norm(), 1e-14);
  const auto factors = extract_factors(model);
  for (std::size_t k = 0; k < t.blocks.size(); ++k) {
    EXPECT_LE((model.P[k].transpose() * model.P[k] - Matrix::Identity(2, 2)).norm(), 1e-10);
    EXPECT_LE((factors[k] * model.B.transpose() - t.blocks[k]).norm(), 1e-5 * t.blocks[k].norm());
  }
}

TEST(FitPf2, NormalizationPreservesFittedBlocks) {
  auto t = pf2_instance(12, 30, 2, 3, 5, false);
  ScaModel m;
  m.B = random_gaussian(12, 2, 7) * 3.0;
  m.A = random_gaussian(2, 2, 8);
  for (int k = 0; k < 3; ++k) {
    m.P.push_back(random_orthonormal(30, 2, 20 + k));
    m.C.push_back(Vector::Constant(2, -1.5 + k));
  }
  std::vector<Matrix> before;
  for (int k = 0; k < 3; ++k) before.push_back(m.P[k] * m.A * m.C[k].asDiagonal() * m.B.transpose());
  normalize_model(m);
  for (int k = 0; k < 3; ++k)
    EXPECT_LE((m.P[k] * m.A * m.C[k].asDiagonal() * m.B.transpose() - before[k]).norm(), 1e-10 * before[k].norm());
  const Matrix ata = m.A.transpose() * m.A;
  for (Eigen::Index j = 0; j < 2; ++j) EXPECT_NEAR(ata(j, j), 1.0, 1e-12);
}

TEST(FitPf2, RankOneCommonLoadingIsExact) {
  const Matrix b = random_gaussian(10, 1, 9);
  std::vector<Matrix> blocks;
  for (int k = 0; k < 4; ++k) blocks.push_back(random_gaussian(20, 1, 40 + k) * b.transpose());
  const auto model = fit_pf2(blocks, 1, {}, 1);
  EXPECT_LE(model.sse, 1e-20 * energy(blocks));
  std::vector<Matrix> noisy = blocks;
  double tail = 0.0;
  for (std::size_t k = 0; k < noisy.size(); ++k) {
    noisy[k] += 0.1 * random_gaussian(20, 10, 60 + k);
    const Vector s = thin_svd(noisy[k]).S;
    tail += s.tail(s.size() - 1).squaredNorm();
  }
  EXPECT_GE(fit_pf2(noisy, 1, {}, 1).sse, tail * (1.0 - 1e-10));
}

TEST(FitPf2, UncorrelatedTruthGivesIdentityPhi) {
  const auto t = pf2_instance(20, 200, 2, 6, 12, true);
  const auto model = fit_pf2(t.blocks, 2, long_run(), 3);
  Matrix off = model.Phi;
  off.diagonal().setZero();
  EXPECT_LE(off.cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_GE(min_abs_column_congruence(t.B, model.B), 0.999999);
}

TEST(FitScaInd, FixedIdentityCorrelation) {
  const auto t = pf2_instance(15, 40, 3, 5, 6, true);
  const auto model = fit_sca_ind(t.blocks, 3, {}, 1);
  EXPECT_TRUE(model.Phi == Matrix::Identity(3, 3));
  EXPECT_LE(model.sse, 1e-6 * energy(t.blocks));
  EXPECT_GE(min_abs_column_congruence(t.B, model.B), 0.999);
}

TEST(FitScaInd, MatchesPf2OnUncorrelatedTruth) {
  auto t = pf2_instance(30, 200, 2, 6, 13, true);
  for (std::size_t k = 0; k < t.blocks.size(); ++k) t.blocks[k] += 0.1 * random_gaussian(200, 30, 500 + k);
  const double cc_ind = column_congruence(t.B, align_to_truth(fit_sca_ind(t.blocks, 2, {}, 1).B, t.B).aligned);
  const double cc_pf2 = column_congruence(t.B, align_to_truth(fit_pf2(t.blocks, 2, {}, 1).B, t.B).aligned);
  EXPECT_GE(cc_ind, 0.95);
  EXPECT_NEAR(cc_ind, cc_pf2, 0.02);
}

TEST(FitPf2, SerialAndParallelStartsAgree) {
  auto t = pf2_instance(15, 40, 2, 4, 7, false);
  for (std::size_t k = 0; k < t.blocks.size(); ++k) t.blocks[k] += 0.2 * random_gaussian(40, 15, 700 + k);
  ScaOptions s;
  s.execution = Execution::serial;
  ScaOptions p;
  const auto a = fit_pf2(t.blocks, 2, s, 3);
  const auto b = fit_pf2(t.blocks, 2, p, 3);
  EXPECT_TRUE(a.B == b.B);
  EXPECT_EQ(a.sse_trace, b.sse_trace);
  EXPECT_EQ(a.start, b.start);
}

TEST(FitPf2, RejectsInvalidInput) {
  std::vector<Matrix> blocks{random_gaussian(5, 4, 1)};
  EXPECT_THROW(fit_pf2(blocks, 0, {}, 1), ConfigError);
  EXPECT_THROW(fit_pf2(blocks, 5, {}, 1), ConfigError);
  EXPECT_THROW(fit_pf2(std::vector<Matrix>{}, 1, {}, 1), ConfigError);
}
