#ifndef QFIL_POLICY_HPP_
#define QFIL_POLICY_HPP_

#include <span>

#include "qfil/dataset.hpp"
#include "qfil/heads.hpp"
#include "qfil/mlp.hpp"
#include "qfil/quantile.hpp"

namespace qfil {

// MLP-backed policy over an environment's action space. Continuous
// environments get a truncated-normal head (outputs: mean, log-std);
// discrete environments get a categorical head (outputs: logits).
class Policy {
 public:
  Policy(EnvInfo env, MlpParams params);

  // Fresh policy with standard init. The truncated-normal log-std output
  // bias starts at kInitLogStd; see the project README for why training
  // must not start at the clamp boundary.
  static Policy init(const EnvInfo& env, RngStream& rng, int width = 50, int depth = 2);
  static constexpr double kInitLogStd = -1.0;

  const EnvInfo& env() const { return env_; }
  const MlpParams& params() const { return params_; }
  MlpParams& mutable_params() { return params_; }

  TruncNormalHead trunc_normal_head(std::span<const double> raw_state) const;
  CategoricalHead categorical_head(std::span<const double> raw_state) const;

  double sample_action(std::span<const double> raw_state, RngStream& rng) const;
  double modal_action(std::span<const double> raw_state) const;
  double logprob(std::span<const double> raw_state, double action) const;

  PolicySampleFn sampler() const;

 private:
  EnvInfo env_;
  MlpParams params_;
};

// Q network over (state, action) features with a frozen target copy for
// bootstrapped regression.
class QNetwork {
 public:
  QNetwork(EnvInfo env, MlpParams params);

  static QNetwork init(const EnvInfo& env, RngStream& rng, int width = 50, int depth = 2);

  const EnvInfo& env() const { return env_; }
  const MlpParams& params() const { return params_; }
  MlpParams& mutable_params() { return params_; }
  const MlpParams& target_params() const { return target_; }

  double value(std::span<const double> raw_state, double action) const;
  double target_value(std::span<const double> raw_state, double action) const;

  // Exponential moving average update of the target toward the online net.
  void update_target(double rate);
  void sync_target() { target_ = params_; }

  QFn as_fn() const;

 private:
  EnvInfo env_;
  MlpParams params_;
  MlpParams target_;
};

}  // namespace qfil

#endif  // QFIL_POLICY_HPP_
