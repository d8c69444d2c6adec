#include "qfil/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qfil {

namespace {

void check_tau(double tau) {
  if (!(tau >= 0.0) || !(tau < 1.0)) {
    throw std::invalid_argument("quantile: tau must lie in [0, 1)");
  }
}

}  // namespace

double empirical_quantile(std::span<const double> values, double tau) {
  if (values.empty()) throw std::invalid_argument("empirical_quantile: empty values");
  check_tau(tau);
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(sorted.size());
  // Smallest j in [1, M] with j/M > tau; such j exists since M/M = 1 > tau.
  // The comparison uses the same correctly rounded division as a step-CDF
  // evaluation, so it agrees exactly with exact-arithmetic oracles.
  std::size_t lo = 1, hi = sorted.size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (static_cast<double>(mid) / m > tau) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return sorted[lo - 1];
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double tau) {
  if (values.empty()) throw std::invalid_argument("weighted_quantile: empty values");
  if (values.size() != weights.size()) {
    throw std::invalid_argument("weighted_quantile: size mismatch");
  }
  check_tau(tau);
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("weighted_quantile: negative weight");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("weighted_quantile: zero total weight");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  double cum = 0.0;
  for (std::size_t i : order) {
    cum += weights[i];
    if (cum / total > tau) return values[i];
  }
  return values[order.back()];  // guards accumulated rounding below 1
}

double pushforward_cdf(std::span<const double> values, double v) {
  if (values.empty()) throw std::invalid_argument("pushforward_cdf: empty values");
  std::size_t count = 0;
  for (double x : values) count += x <= v ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(values.size());
}

namespace {

// Exact integral of |F1^{-1}(z) - F2^{-1}(z)| dz over [0,1] for two
// empirical step distributions of possibly different sizes.
double w1_merge(std::vector<double> xs, std::vector<double> ys) {
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const double nx = static_cast<double>(xs.size());
  const double ny = static_cast<double>(ys.size());
  std::size_t i = 0, j = 0;
  double z = 0.0, total = 0.0;
  while (i < xs.size() && j < ys.size()) {
    const double zi = static_cast<double>(i + 1) / nx;
    const double zj = static_cast<double>(j + 1) / ny;
    const double znext = std::min(zi, zj);
    total += (znext - z) * std::abs(xs[i] - ys[j]);
    z = znext;
    if (zi <= zj) ++i;
    if (zj <= zi) ++j;
  }
  return total;
}

}  // namespace

double w1_empirical(std::span<const double> xs, std::span<const double> ys) {
  if (xs.empty() || ys.empty()) throw std::invalid_argument("w1_empirical: empty input");
  if (xs.size() == ys.size()) {
    std::vector<double> sx(xs.begin(), xs.end());
    std::vector<double> sy(ys.begin(), ys.end());
    std::sort(sx.begin(), sx.end());
    std::sort(sy.begin(), sy.end());
    double total = 0.0;
    for (std::size_t i = 0; i < sx.size(); ++i) total += std::abs(sx[i] - sy[i]);
    return total / static_cast<double>(sx.size());
  }
  return w1_merge({xs.begin(), xs.end()}, {ys.begin(), ys.end()});
}

PushforwardSamples pushforward(const QFn& q, const PolicySampleFn& policy,
                               std::span<const double> state, int m, RngStream& rng,
                               std::string policy_label) {
  if (m < 1) throw std::invalid_argument("pushforward: m must be positive");
  PushforwardSamples out;
  out.policy_label = std::move(policy_label);
  out.values.reserve(m);
  for (int i = 0; i < m; ++i) {
    const double a = policy(state, rng);
    out.values.push_back(q(state, a));
  }
  return out;
}

double value_function_quantile(const QFn& q, const PolicySampleFn& behavior,
                               std::span<const double> state, const QuantileConfig& cfg,
                               RngStream& rng) {
  check_tau(cfg.tau);
  const PushforwardSamples ps = pushforward(q, behavior, state, cfg.samples, rng);
  return empirical_quantile(ps.values, cfg.tau);
}

}  // namespace qfil
