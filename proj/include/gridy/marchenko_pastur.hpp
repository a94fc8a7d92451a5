#pragma once

#include <memory>
#include <vector>

namespace gridy {

/// Marchenko-Pastur law with aspect ratio beta in (0, 1] and unit variance,
/// supported on [(1 - sqrt(beta))^2, (1 + sqrt(beta))^2].
///
/// The CDF is tabulated once per instance by adaptive Gauss-Legendre
/// quadrature of the density after the substitution x = m - h cos(theta),
/// which removes the square-root endpoint singularities. Quantiles invert the
/// table by bisection inside the bracketing panel.
class MarchenkoPastur {
 public:
  explicit MarchenkoPastur(double beta);

  double beta() const { return beta_; }
  double lower_edge() const { return lower_; }
  double upper_edge() const { return upper_; }

  double density(double x) const;
  double cdf(double x) const;
  /// 100q-th percentile, q in [0, 1].
  double quantile(double q) const;

 private:
  double integrate_theta(double from, double to) const;
  double cdf_theta(double theta) const;
  double position(double theta) const;

  double beta_;
  double lower_;
  double upper_;
  double mid_;
  double half_width_;
  double norm_ = 1.0;
  std::vector<double> breaks_;      // panel edges in theta
  std::vector<double> cumulative_;  // CDF at each edge
};

/// Shared, lazily built instance for `beta` (thread-safe).
std::shared_ptr<const MarchenkoPastur> marchenko_pastur(double beta);

/// Quantile MP(beta)_q. Throws ConfigError for beta outside (0, 1] or q outside [0, 1].
double mp_quantile(double beta, double q);

}  // namespace gridy
