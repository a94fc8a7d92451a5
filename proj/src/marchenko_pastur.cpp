#include "gridy/marchenko_pastur.hpp"

#include "gridy/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace gridy {

namespace {

constexpr int kOrder = 20;
constexpr double kPanelTol = 1e-15;

struct GaussLegendre {
  std::array<double, kOrder> nodes{};
  std::array<double, kOrder> weights{};

  GaussLegendre() {
    for (int i = 0; i < kOrder; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (kOrder + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int n = 2; n <= kOrder; ++n) {
          double p2 = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
          p0 = p1;
          p1 = p2;
        }
        dp = kOrder * (x * p1 - p0) / (x * x - 1.0);
        double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[static_cast<std::size_t>(i)] = x;
      weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }
};

const GaussLegendre& gauss_legendre() {
  static const GaussLegendre rule;
  return rule;
}

}  // namespace

MarchenkoPastur::MarchenkoPastur(double beta) : beta_(beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("Marchenko-Pastur aspect ratio must lie in (0, 1]");
  const double s = std::sqrt(beta);
  lower_ = (1.0 - s) * (1.0 - s);
  upper_ = (1.0 + s) * (1.0 + s);
  mid_ = 0.5 * (lower_ + upper_);
  half_width_ = 0.5 * (upper_ - lower_);

  // Adaptive panels: split until one rule agrees with the sum of its halves.
  constexpr int kInitial = 32;
  std::vector<std::pair<double, double>> stack;
  for (int i = kInitial - 1; i >= 0; --i)
    stack.emplace_back(std::numbers::pi * i / kInitial, std::numbers::pi * (i + 1) / kInitial);
  breaks_.push_back(0.0);
  cumulative_.push_back(0.0);
  while (!stack.empty()) {
    auto [a, b] = stack.back();
    stack.pop_back();
    const double whole = integrate_theta(a, b);
    const double c = 0.5 * (a + b);
    const double halves = integrate_theta(a, c) + integrate_theta(c, b);
    if (!(std::abs(whole - halves) <= kPanelTol) && (b - a) > 1e-9) {
      stack.emplace_back(c, b);
      stack.emplace_back(a, c);
      continue;
    }
    breaks_.push_back(b);
    cumulative_.push_back(cumulative_.back() + halves);
  }
  // The table integrates to one up to quadrature error; normalise the residue away.
  norm_ = 1.0 / cumulative_.back();
  for (auto& v : cumulative_) v *= norm_;
}

double MarchenkoPastur::density(double x) const {
  if (x <= lower_ || x >= upper_) return 0.0;
  return std::sqrt((upper_ - x) * (x - lower_)) / (2.0 * std::numbers::pi * beta_ * x);
}

double MarchenkoPastur::integrate_theta(double from, double to) const {
  const auto& rule = gauss_legendre();
  const double c = 0.5 * (from + to);
  const double h = 0.5 * (to - from);
  double sum = 0.0;
  for (int i = 0; i < kOrder; ++i) {
    const double theta = c + h * rule.nodes[static_cast<std::size_t>(i)];
    const double sn = std::sin(theta);
    const double x = position(theta);
    sum += rule.weights[static_cast<std::size_t>(i)] * half_width_ * half_width_ * sn * sn /
           (2.0 * std::numbers::pi * beta_ * x);
  }
  return sum * h;
}

double MarchenkoPastur::cdf_theta(double theta) const {
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), theta);
  if (it == breaks_.begin()) return 0.0;
  if (it == breaks_.end()) return 1.0;
  const auto i = static_cast<std::size_t>(std::distance(breaks_.begin(), it) - 1);
  return cumulative_[i] + norm_ * integrate_theta(breaks_[i], theta);
}

double MarchenkoPastur::cdf(double x) const {
  if (x <= lower_) return 0.0;
  if (x >= upper_) return 1.0;
  const double theta = std::acos(std::clamp((mid_ - x) / half_width_, -1.0, 1.0));
  return std::clamp(cdf_theta(theta), 0.0, 1.0);
}

double MarchenkoPastur::quantile(double q) const {
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("Marchenko-Pastur quantile level must lie in [0, 1]");
  if (q == 0.0) return lower_;
  if (q == 1.0) return upper_;
  auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), q);
  const auto hi = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
  const std::size_t lo = hi == 0 ? 0 : hi - 1;
  double a = breaks_[lo];
  double b = breaks_[std::min(hi, breaks_.size() - 1)];
  for (int it_count = 0; it_count < 200 && (b - a) > 1e-15; ++it_count) {
    const double c = 0.5 * (a + b);
    if (cdf_theta(c) < q)
      a = c;
    else
      b = c;
  }
  return position(0.5 * (a + b));
}

double MarchenkoPastur::position(double theta) const {
  // lower + half_width (1 - cos theta), free of cancellation near the lower edge.
  const double s = std::sin(0.5 * theta);
  return lower_ + 2.0 * half_width_ * s * s;
}

std::shared_ptr<const MarchenkoPastur> marchenko_pastur(double beta) {
  static std::mutex mutex;
  static std::map<double, std::shared_ptr<const MarchenkoPastur>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(beta);
  if (it != cache.end()) return it->second;
  auto law = std::make_shared<const MarchenkoPastur>(beta);
  cache.emplace(beta, law);
  return law;
}

double mp_quantile(double beta, double q) {
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("mp_quantile: beta must lie in (0, 1]");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("mp_quantile: q must lie in [0, 1]");
  return marchenko_pastur(beta)->quantile(q);
}

}  // namespace gridy
