#include "qfil/policy.hpp"

#include <stdexcept>

namespace qfil {

namespace {

int policy_out_dim(const EnvInfo& env) {
  return env.action_kind == EnvInfo::ActionKind::kDiscrete ? env.num_actions : 2;
}

}  // namespace

Policy::Policy(EnvInfo env, MlpParams params) : env_(std::move(env)), params_(std::move(params)) {
  if (params_.shape.in_dim != env_.feature_dim() ||
      params_.shape.out_dim != policy_out_dim(env_)) {
    throw std::invalid_argument("Policy: parameter shape does not match environment");
  }
}

Policy Policy::init(const EnvInfo& env, RngStream& rng, int width, int depth) {
  MlpShape shape{env.feature_dim(), policy_out_dim(env), width, depth};
  MlpParams p = MlpParams::init(shape, rng);
  if (env.action_kind == EnvInfo::ActionKind::kContinuous) {
    p.biases.back()[1] = kInitLogStd;
  }
  return Policy(env, std::move(p));
}

TruncNormalHead Policy::trunc_normal_head(std::span<const double> raw_state) const {
  if (env_.action_kind != EnvInfo::ActionKind::kContinuous) {
    throw std::logic_error("Policy: truncated-normal head on a discrete environment");
  }
  const std::vector<double> f = encode_state(env_, raw_state);
  const std::vector<double> out = mlp_forward(params_, f);
  return TruncNormalHead{out[0], out[1], env_.action_lo, env_.action_hi};
}

CategoricalHead Policy::categorical_head(std::span<const double> raw_state) const {
  if (env_.action_kind != EnvInfo::ActionKind::kDiscrete) {
    throw std::logic_error("Policy: categorical head on a continuous environment");
  }
  const std::vector<double> f = encode_state(env_, raw_state);
  return CategoricalHead{mlp_forward(params_, f)};
}

double Policy::sample_action(std::span<const double> raw_state, RngStream& rng) const {
  if (env_.action_kind == EnvInfo::ActionKind::kDiscrete) {
    return static_cast<double>(categorical_head(raw_state).sample(rng));
  }
  return trunc_normal_head(raw_state).sample(rng);
}

double Policy::modal_action(std::span<const double> raw_state) const {
  if (env_.action_kind == EnvInfo::ActionKind::kDiscrete) {
    return static_cast<double>(categorical_head(raw_state).mode());
  }
  return trunc_normal_head(raw_state).mode();
}

double Policy::logprob(std::span<const double> raw_state, double action) const {
  if (env_.action_kind == EnvInfo::ActionKind::kDiscrete) {
    return categorical_head(raw_state).logprob(static_cast<int>(action));
  }
  return trunc_normal_head(raw_state).logprob(action);
}

PolicySampleFn Policy::sampler() const {
  return [this](std::span<const double> state, RngStream& rng) {
    return sample_action(state, rng);
  };
}

QNetwork::QNetwork(EnvInfo env, MlpParams params)
    : env_(std::move(env)), params_(std::move(params)), target_(params_) {
  const int in = env_.feature_dim() + env_.action_feature_dim();
  if (params_.shape.in_dim != in || params_.shape.out_dim != 1) {
    throw std::invalid_argument("QNetwork: parameter shape does not match environment");
  }
}

QNetwork QNetwork::init(const EnvInfo& env, RngStream& rng, int width, int depth) {
  MlpShape shape{env.feature_dim() + env.action_feature_dim(), 1, width, depth};
  return QNetwork(env, MlpParams::init(shape, rng));
}

double QNetwork::value(std::span<const double> raw_state, double action) const {
  return mlp_forward(params_, encode_state_action(env_, raw_state, action))[0];
}

double QNetwork::target_value(std::span<const double> raw_state, double action) const {
  return mlp_forward(target_, encode_state_action(env_, raw_state, action))[0];
}

void QNetwork::update_target(double rate) {
  for (std::size_t k = 0; k < target_.weights.size(); ++k) {
    for (std::size_t i = 0; i < target_.weights[k].size(); ++i) {
      target_.weights[k][i] += rate * (params_.weights[k][i] - target_.weights[k][i]);
    }
    for (std::size_t i = 0; i < target_.biases[k].size(); ++i) {
      target_.biases[k][i] += rate * (params_.biases[k][i] - target_.biases[k][i]);
    }
  }
}

QFn QNetwork::as_fn() const {
  return [this](std::span<const double> state, double action) { return value(state, action); };
}

}  // namespace qfil
