#include "gridy/error.hpp"
#include "gridy/linalg.hpp"
#include "gridy/simulation.hpp"
#include "test_util.hpp"

using namespace gridy;

namespace {

double riccati_residual(const Matrix& phi, const Matrix& psi, double sigma) {
  return (phi - psi * phi * psi.transpose() - sigma * Matrix::Identity(phi.rows(), phi.cols())).norm();
}

double spectral_radius(const Matrix& m) { return Eigen::EigenSolver<Matrix>(m).eigenvalues().cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Loadings, SupportSizesAndDisjointness) {
  Rng rng = make_rng(1, "loadings");
  const auto l = gen_loadings(8, 2, 2, rng);
  auto support = [](const Matrix& b) {
    std::vector<bool> s(static_cast<std::size_t>(b.rows()));
    for (Eigen::Index i = 0; i < b.rows(); ++i) s[static_cast<std::size_t>(i)] = b.row(i).cwiseAbs().sum() > 0.0;
    return s;
  };
  const auto sj = support(l.joint), s1 = support(l.group[0]), s2 = support(l.group[1]);
  EXPECT_EQ(std::count(sj.begin(), sj.end(), true), 4);
  EXPECT_EQ(std::count(s1.begin(), s1.end(), true), 2);
  EXPECT_EQ(std::count(s2.begin(), s2.end(), true), 2);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(int(sj[i]) + int(s1[i]) + int(s2[i]), 1);
  for (const Matrix* b : {&l.joint, &l.group[0], &l.group[1]})
    for (Eigen::Index i = 0; i < b->size(); ++i) {
      const double v = b->data()[i];
      EXPECT_TRUE(v == 0.0 || (v > 0.0 && v < 1.0));
    }
}

TEST(FactorCorrelation, BandedEigenvalues) {
  const std::vector<std::vector<double>> expected{{0.4, 1.6}, {0.2883, 0.7, 2.0117}, {0.2595, 0.4159, 1.0405, 2.2841}};
  for (int r = 2; r <= 4; ++r) {
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(factor_correlation(1, r)).eigenvalues();
    for (int i = 0; i < r; ++i) EXPECT_NEAR(ev(i), expected[static_cast<std::size_t>(r - 2)][static_cast<std::size_t>(i)], 1e-4);
  }
  EXPECT_DOUBLE_EQ(factor_correlation(1, 4)(0, 3), -0.1);
  EXPECT_TRUE(factor_correlation(2, 3) == Matrix::Identity(3, 3));
  EXPECT_THROW(factor_correlation(1, 5), ConfigError);
}

TEST(Riccati, PinnedSolutions) {
  EXPECT_NEAR(solve_stationary_transition(Matrix::Ones(1, 1), 0.2)(0, 0), std::sqrt(0.8), 1e-14);
  const Matrix psi2 = solve_stationary_transition(factor_correlation(1, 2), 0.2);
  const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(psi2).eigenvalues();
  EXPECT_NEAR(ev(0), std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(ev(1), std::sqrt(0.875), 1e-12);
  EXPECT_LE((solve_stationary_transition(Matrix::Identity(3, 3), 0.3) - std::sqrt(0.7) * Matrix::Identity(3, 3)).norm(),
            1e-14);
}

TEST(Riccati, ResidualAndStabilityOnAdmissibleInputs) {
  int solved = 0;
  for (int type : {1, 2})
    for (int r = 1; r <= 4; ++r)
      for (double sigma : {0.2, 0.3}) {
        const Matrix phi = factor_correlation(type, r);
        const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(phi).eigenvalues().minCoeff();
        if (lmin <= sigma) {
          EXPECT_THROW(solve_stationary_transition(phi, sigma), ConfigError);
          continue;
        }
        const Matrix psi = solve_stationary_transition(phi, sigma);
        EXPECT_LE(riccati_residual(phi, psi, sigma), 1e-10);
        EXPECT_LT(spectral_radius(psi), 1.0);
        ++solved;
      }
  EXPECT_GE(solved, 13);
}

TEST(SimulateVar1, LongRunCovarianceMatchesPhi) {
  const Matrix phi = factor_correlation(1, 2);
  const Matrix psi = solve_stationary_transition(phi, 0.2);
  Rng rng = make_rng(3, "var");
  const Matrix a = simulate_var1(psi, 0.2, 20000, 200, rng);
  EXPECT_LE((a.transpose() * a / 20000.0 - phi).cwiseAbs().maxCoeff(), 0.1);
}

TEST(SimulateDataset, DeterministicAndShaped) {
  SimulationConfig cfg;
  cfg.d = 20;
  cfg.T = 50;
  cfg.K = 3;
  cfg.seed = 5;
  const auto a = simulate_dataset(cfg);
  const auto b = simulate_dataset(cfg);
  ASSERT_EQ(a.data.size(), 6u);
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_TRUE(a.data.block(k).values == b.data.block(k).values);
    EXPECT_EQ(a.data.block(k).group, k < 3 ? Group::first : Group::second);
    EXPECT_EQ(a.data.block(k).values.rows(), 50);
  }
  cfg.seed = 6;
  EXPECT_FALSE(simulate_dataset(cfg).data.block(0).values == a.data.block(0).values);
}

TEST(SimulateDataset, DecompositionAndScales) {
  SimulationConfig cfg;
  cfg.d = 20;
  cfg.T = 60;
  cfg.K = 2;
  cfg.c = 4.0;
  cfg.sigma_eps = 0.0;
  cfg.seed = 7;
  const auto sim = simulate_dataset(cfg);
  EXPECT_NEAR(sim.truth.C_joint(0), 2.0 * 5.0, 1e-12);
  EXPECT_NEAR(sim.truth.C_joint(1), 2.0 * 6.0, 1e-12);
  for (std::size_t k = 0; k < sim.data.size(); ++k) {
    const Group g = sim.data.block(k).group;
    const Matrix signal = sim.truth.joint_block(k) + sim.truth.group_block(k, g);
    EXPECT_LE((sim.data.block(k).values - signal).norm(), 1e-12 * signal.norm());
  }
}

TEST(SimulateDataset, ExactCrossProducts) {
  SimulationConfig cfg;
  cfg.d = 20;
  cfg.T = 60;
  cfg.K = 2;
  cfg.exact_cross_products = true;
  cfg.seed = 8;
  const auto sim = simulate_dataset(cfg);
  const Matrix c = sim.truth.C_joint.asDiagonal();
  for (const auto& f : sim.truth.F_joint)
    EXPECT_LE((f.transpose() * f - 60.0 * c * sim.truth.Phi_joint * c).norm(), 1e-8 * f.squaredNorm());
}

TEST(SimulateDataset, LemmaConditionsOnTruth) {
  SimulationConfig cfg;
  cfg.d = 30;
  cfg.seed = 9;
  cfg.K = 1;
  const auto sim = simulate_dataset(cfg);
  for (int g = 0; g < 2; ++g) EXPECT_EQ((sim.truth.B_joint.transpose() * sim.truth.B_group[static_cast<std::size_t>(g)]).norm(), 0.0);
  Matrix stacked(30, 4);
  stacked << sim.truth.B_group[0], sim.truth.B_group[1];
  EXPECT_EQ(numerical_rank(stacked, 1e-10), 4);
}

TEST(SimulationConfig, ValidationErrors) {
  SimulationConfig cfg;
  cfg.r_joint = 3;
  cfg.r_group = 3;
  cfg.corr_type = 1;
  cfg.sigma_xi = 0.3;
  cfg.seed = 1;
  EXPECT_THROW(simulate_dataset(cfg), ConfigError);
  SimulationConfig bad;
  bad.c = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_DOUBLE_EQ(SimulationConfig{}.xi_variance(), 0.2);
  SimulationConfig two;
  two.corr_type = 2;
  EXPECT_DOUBLE_EQ(two.xi_variance(), 0.3);
}

TEST(Snr, ScalesLinearlyInC) {
  SimulationConfig cfg;
  cfg.d = 40;
  cfg.K = 1;
  cfg.T = 20;
  cfg.seed = 10;
  const double base = snr_value(simulate_dataset(cfg).truth);
  cfg.c = 2.0;
  EXPECT_NEAR(snr_value(simulate_dataset(cfg).truth), 2.0 * base, 1e-10 * base);
  double prev = 0.0;
  for (double c : {0.25, 0.5, 0.75, 1.25, 2.0, 4.0}) {
    cfg.c = c;
    const double s = snr_value(simulate_dataset(cfg).truth);
    EXPECT_GT(s, prev);
    prev = s;
  }
}

TEST(Snr, ZeroLoadingsGiveZero) {
  SimulationConfig cfg;
  cfg.d = 20;
  cfg.K = 1;
  cfg.T = 20;
  auto truth = simulate_dataset(cfg).truth;
  truth.B_joint.setZero();
  truth.B_group[0].setZero();
  truth.B_group[1].setZero();
  EXPECT_EQ(snr_value(truth), 0.0);
}

TEST(Snr, MatchesDirectFormulaAndPinnedValue) {
  SimulationConfig cfg;
  cfg.d = 100;
  cfg.corr_type = 2;
  cfg.c = 1.0;
  cfg.K = 1;
  cfg.T = 20;
  cfg.seed = 2024;
  const auto truth = simulate_dataset(cfg).truth;
  // Phi = I and C = diag(5, 6): signal = B C^2 B' for each group's stacked loadings.
  double total = 0.0;
  for (int g = 0; g < 2; ++g) {
    Matrix b(100, 4);
    b << truth.B_joint, truth.B_group[static_cast<std::size_t>(g)];
    Vector c2(4);
    c2 << 25, 36, 25, 36;
    total += (b * c2.asDiagonal() * b.transpose()).norm();
  }
  const double direct = total / 2.0 / std::sqrt(100.0);
  EXPECT_NEAR(snr_value(truth), direct, 1e-12 * direct);
  EXPECT_NEAR(snr_value(truth), 102.50689657694468, 1e-9);
}
