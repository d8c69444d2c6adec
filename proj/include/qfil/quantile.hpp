#ifndef QFIL_QUANTILE_HPP_
#define QFIL_QUANTILE_HPP_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qfil/rng.hpp"

namespace qfil {

// Q function and policy-sampling hooks. States are raw stored states.
using QFn = std::function<double(std::span<const double> state, double action)>;
using PolicySampleFn = std::function<double(std::span<const double> state, RngStream&)>;

// Scalar Q values obtained by pushing policy action samples through Q at
// one state.
struct PushforwardSamples {
  std::vector<double> values;
  std::string policy_label;
};

struct QuantileConfig {
  double tau = 0.9;      // in [0, 1); tau = 1 is rejected (sup is unbounded)
  int samples = 100;     // M
};

// The sup-definition quantile of the empirical step CDF: the smallest
// order statistic x_(j) with j/M > tau. Ties and atoms are handled by the
// step CDF itself; no interpolation.
double empirical_quantile(std::span<const double> values, double tau);

// Same sup-definition on a weighted step CDF (exact all-actions mode for
// finite action sets). Weights must be nonnegative with a positive sum.
double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double tau);

// Fraction of values <= v.
double pushforward_cdf(std::span<const double> values, double v);

// Wasserstein-1 between empirical distributions. Equal sizes reduce to the
// mean absolute difference of sorted samples; unequal sizes are handled by
// exact piecewise integration of the two inverse CDFs.
double w1_empirical(std::span<const double> xs, std::span<const double> ys);

PushforwardSamples pushforward(const QFn& q, const PolicySampleFn& policy,
                               std::span<const double> state, int m, RngStream& rng,
                               std::string policy_label = {});

// Empirical tau-quantile of the pushforward distribution at `state`; this
// is the sampled estimate of the value function quantile.
double value_function_quantile(const QFn& q, const PolicySampleFn& behavior,
                               std::span<const double> state, const QuantileConfig& cfg,
                               RngStream& rng);

}  // namespace qfil

#endif  // QFIL_QUANTILE_HPP_
