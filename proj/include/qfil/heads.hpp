#ifndef QFIL_HEADS_HPP_
#define QFIL_HEADS_HPP_

#include <array>
#include <vector>

#include "qfil/rng.hpp"

namespace qfil {

constexpr double kLogStdLo = -5.0;
constexpr double kLogStdHi = 0.0;

// Normal distribution truncated to [lo, hi]. `mean` is the raw network
// output (unbounded); `log_std` is clamped to [kLogStdLo, kLogStdHi] before
// any density evaluation. Actions at exactly lo or hi are in support.
struct TruncNormalHead {
  double mean = 0.0;
  double log_std = 0.0;
  double lo = 0.0;
  double hi = 1.0;

  double clamped_log_std() const;
  double std_dev() const;

  // Log density at a; throws std::invalid_argument for a outside [lo, hi].
  double logprob(double a) const;
  double sample(RngStream& rng) const;
  double mode() const;  // mean clamped to [lo, hi]

  // d logprob / d (mean, raw log_std). The clamp passes gradient only when
  // the raw log_std lies inside [kLogStdLo, kLogStdHi].
  std::array<double, 2> logprob_grad(double a) const;
};

// Categorical over a finite action set, parameterized by logits.
struct CategoricalHead {
  std::vector<double> logits;

  std::vector<double> probs() const;
  double logprob(int a) const;
  int sample(RngStream& rng) const;
  int mode() const;  // argmax logit, lowest index wins ties

  // d logprob / d logits = onehot(a) - softmax(logits).
  std::vector<double> logprob_grad(int a) const;
};

}  // namespace qfil

#endif  // QFIL_HEADS_HPP_
