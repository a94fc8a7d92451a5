#include "gridy/error.hpp"
#include "gridy/marchenko_pastur.hpp"
#include "gridy/rank_selection.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>
#include <gtest/gtest.h>

#include <cmath>

using namespace gridy;

namespace {

// Independent oracle: tanh-sinh quadrature of the density, inverted by TOMS 748.
double oracle_quantile(double beta, double q) {
  const double lo = std::pow(1.0 - std::sqrt(beta), 2);
  const double hi = std::pow(1.0 + std::sqrt(beta), 2);
  auto density = [&](double x) {
    const double v = (hi - x) * (x - lo);
    return v > 0.0 ? std::sqrt(v) / (2.0 * M_PI * beta * x) : 0.0;
  };
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto cdf = [&](double x) { return x <= lo ? 0.0 : integrator.integrate(density, lo, x); };
  std::uintmax_t iters = 200;
  auto tol = [](double a, double b) { return std::abs(a - b) < 1e-13; };
  const auto bracket = boost::math::tools::toms748_solve([&](double x) { return cdf(x) - q; }, lo, hi, tol, iters);
  return 0.5 * (bracket.first + bracket.second);
}

struct Fixture {
  double beta;
  double q;
  double value;
};

// 30-digit reference values computed once with arbitrary-precision quadrature.
constexpr Fixture kFrozen[] = {
    {0.25, 0.1, 0.39788075585898469}, {0.25, 0.5, 0.91600407068661205}, {0.25, 0.9, 1.7514228290740188},
    {0.5, 0.1, 0.20888988639847157},  {0.5, 0.5, 0.83046588158136355},  {0.5, 0.9, 2.092694842078914},
    {1.0, 0.1, 0.024724975753718667}, {1.0, 0.5, 0.65277594163357037}, {1.0, 0.9, 2.5945712078974897},
};

}  // namespace

TEST(MarchenkoPastur, MatchesFrozenHighPrecisionValues) {
  for (const auto& f : kFrozen) EXPECT_NEAR(mp_quantile(f.beta, f.q), f.value, 1e-8) << f.beta << " " << f.q;
}

TEST(MarchenkoPastur, MatchesIndependentQuadratureOracle) {
  for (const auto& f : kFrozen) {
    const double oracle = oracle_quantile(f.beta, f.q);
    EXPECT_NEAR(oracle, f.value, 1e-9);
    EXPECT_NEAR(mp_quantile(f.beta, f.q), oracle, 1e-6);
  }
}

TEST(MarchenkoPastur, SupportEndpoints) {
  EXPECT_NEAR(mp_quantile(1.0, 0.0), 0.0, 1e-12);
  EXPECT_NEAR(mp_quantile(0.25, 1.0), 2.25, 1e-12);
  EXPECT_NEAR(mp_quantile(0.25, 0.0), 0.25, 1e-12);
}

TEST(MarchenkoPastur, QuantileIsStrictlyIncreasingInsideSupport) {
  for (double beta : {0.1, 0.3, 0.7, 1.0}) {
    const auto law = marchenko_pastur(beta);
    double prev = law->lower_edge();
    for (int i = 1; i < 200; ++i) {
      const double v = law->quantile(i / 200.0);
      EXPECT_GT(v, prev);
      EXPECT_LT(v, law->upper_edge());
      prev = v;
    }
    EXPECT_NEAR(law->cdf(law->quantile(0.37)), 0.37, 1e-10);
  }
}

TEST(MarchenkoPastur, RejectsInvalidArguments) {
  EXPECT_THROW(mp_quantile(0.0, 0.5), ConfigError);
  EXPECT_THROW(mp_quantile(1.5, 0.5), ConfigError);
  EXPECT_THROW(mp_quantile(0.5, 1.5), ConfigError);
}

TEST(Shrinker, PinnedValues) {
  EXPECT_NEAR(optimal_shrinker(2.0, 1.0), 1.0, 1e-12);
  // Direct evaluation of sqrt((a^2 - b - 1)^2 - 4b) / sqrt(2) ... at a = 2, beta = 0.25.
  const double a = 2.0, b = 0.25;
  const double t = a * a - b - 1.0;
  const double direct = std::sqrt(t + std::sqrt(t * t - 4.0 * b)) / std::sqrt(2.0);
  EXPECT_NEAR(optimal_shrinker(a, b), direct, 1e-12);
  EXPECT_NEAR(optimal_shrinker(2.0, 0.25), 1.6297, 1e-3);
}

TEST(Shrinker, BulkEdgeAndBelow) {
  // Edges exactly representable; the shrinker has a square-root singularity there.
  for (double beta : {0.0625, 0.25, 1.0}) {
    const double edge = 1.0 + std::sqrt(beta);
    EXPECT_NEAR(optimal_shrinker(edge, beta), std::pow(beta, 0.25), 1e-12);
    EXPECT_EQ(optimal_shrinker(edge - 1e-9, beta), 0.0);
    EXPECT_EQ(optimal_shrinker(0.3, beta), 0.0);
  }
}

TEST(Shrinker, MonotoneAndShrinking) {
  for (double beta : {0.2, 0.5, 1.0}) {
    double prev = 0.0;
    for (double a = 0.0; a < 20.0; a += 0.01) {
      const double h = optimal_shrinker(a, beta);
      EXPECT_GE(h, prev - 1e-14);
      if (a > 1.0 + std::sqrt(beta)) EXPECT_LT(h, a);
      prev = h;
    }
  }
}
