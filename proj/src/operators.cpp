#include "qfil/operators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace qfil {

std::size_t steps_per_epoch(std::size_t dataset_size, int batch) {
  return std::max<std::size_t>(1, (dataset_size + batch - 1) / batch);
}

namespace {

void trace_loss(TrainTrace* trace, std::int64_t step, double loss) {
  if (trace && step % trace->trace_every == 0) trace->losses.push_back(loss);
}

}  // namespace

double policy_nll_step(PolicyTrainState& st, const Dataset& ds,
                       std::span<const std::size_t> idx, const WeightVector* weights) {
  const EnvInfo& env = ds.env();
  MlpParams& params = st.policy.mutable_params();
  MlpGrads grads = MlpParams::zeros(params.shape);
  ForwardCache cache;
  const double inv_batch = 1.0 / static_cast<double>(idx.size());
  double loss = 0.0;
  std::vector<double> dout(params.shape.out_dim);
  for (std::size_t i : idx) {
    const Transition& t = ds[i];
    const double w = weights ? (*weights)[i] : 1.0;
    if (w == 0.0) continue;
    const std::vector<double> feat = encode_state(env, t.state);
    mlp_forward_cached(params, feat, cache);
    std::fill(dout.begin(), dout.end(), 0.0);
    if (env.action_kind == EnvInfo::ActionKind::kContinuous) {
      TruncNormalHead head{cache.output[0], cache.output[1], env.action_lo, env.action_hi};
      loss += -w * head.logprob(t.action) * inv_batch;
      const auto g = head.logprob_grad(t.action);
      dout[0] = -w * g[0] * inv_batch;
      dout[1] = -w * g[1] * inv_batch;
    } else {
      CategoricalHead head{cache.output};
      const int a = static_cast<int>(t.action);
      loss += -w * head.logprob(a) * inv_batch;
      const std::vector<double> g = head.logprob_grad(a);
      for (std::size_t j = 0; j < dout.size(); ++j) dout[j] = -w * g[j] * inv_batch;
    }
    mlp_backward(params, cache, dout, grads);
  }
  if (!std::isfinite(loss)) {
    throw TrainError("policy", st.steps_done, "non-finite loss");
  }
  opt_step(st.opt, params, grads);
  ++st.steps_done;
  return loss;
}

namespace {

double q_regression_step(QTrainState& st, const Dataset& ds,
                         std::span<const std::size_t> idx,
                         const std::function<double(const Transition&)>& target_fn,
                         const char* stage) {
  const EnvInfo& env = ds.env();
  MlpParams& params = st.q.mutable_params();
  MlpGrads grads = MlpParams::zeros(params.shape);
  ForwardCache cache;
  const double inv_batch = 1.0 / static_cast<double>(idx.size());
  double loss = 0.0;
  std::vector<double> dout(1);
  for (std::size_t i : idx) {
    const Transition& t = ds[i];
    const std::vector<double> feat = encode_state_action(env, t.state, t.action);
    mlp_forward_cached(params, feat, cache);
    const double pred = cache.output[0];
    const double target = target_fn(t);
    const double err = pred - target;
    loss += err * err * inv_batch;
    dout[0] = 2.0 * err * inv_batch;
    mlp_backward(params, cache, dout, grads);
  }
  if (!std::isfinite(loss)) {
    throw TrainError(stage, st.steps_done, "non-finite loss");
  }
  opt_step(st.opt, params, grads);
  ++st.steps_done;
  if (st.steps_done % st.target_every == 0) st.q.update_target(st.target_rate);
  return loss;
}

}  // namespace

double q_sarsa_step(QTrainState& st, const Dataset& ds,
                    std::span<const std::size_t> idx, double gamma) {
  return q_regression_step(
      st, ds, idx,
      [&](const Transition& t) {
        if (t.done) return t.reward;
        return t.reward + gamma * st.q.target_value(t.next_state, *t.next_action);
      },
      "q_sarsa");
}

double q_backup_offpolicy_step(QTrainState& st, const Dataset& ds,
                               std::span<const std::size_t> idx, const Policy& pi,
                               double gamma, RngStream& action_rng) {
  return q_regression_step(
      st, ds, idx,
      [&](const Transition& t) {
        if (t.done) return t.reward;
        const double a = pi.sample_action(t.next_state, action_rng);
        return t.reward + gamma * st.q.target_value(t.next_state, a);
      },
      "q_offpolicy");
}

Policy fit_behavior(const Dataset& ds, const TrainHyper& hyper, RngStream& init_rng,
                    RngStream& batch_rng, TrainTrace* trace) {
  if (ds.empty()) throw std::invalid_argument("fit_behavior: empty dataset");
  Policy init = Policy::init(ds.env(), init_rng);
  return weighted_imitation(ds, nullptr, std::move(init), hyper, batch_rng, nullptr, trace);
}

QNetwork fit_q_sarsa(const Dataset& ds, const TrainHyper& hyper, double gamma,
                     RngStream& init_rng, RngStream& batch_rng, TrainTrace* trace) {
  if (ds.empty()) throw std::invalid_argument("fit_q_sarsa: empty dataset");
  QTrainState st(QNetwork::init(ds.env(), init_rng), hyper.lr);
  for (int step = 0; step < hyper.steps; ++step) {
    const auto idx = ds.sample_indices(hyper.batch, batch_rng);
    const double loss = q_sarsa_step(st, ds, idx, gamma);
    trace_loss(trace, step, loss);
  }
  return std::move(st.q);
}

WeightVector qfil_weights(const Dataset& ds, const QFn& q,
                          const PolicySampleFn& behavior, const FilterConfig& cfg,
                          RngStream& rng) {
  WeightVector w(ds.size(), 0.0);
  const QuantileConfig qc{cfg.tau, cfg.quantile_samples};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Transition& t = ds[i];
    const double v_tau = value_function_quantile(q, behavior, t.state, qc, rng);
    const double qi = q(t.state, t.action);
    w[i] = (cfg.geq ? qi >= v_tau : qi > v_tau) ? 1.0 : 0.0;
  }
  return w;
}

WeightVector qfil_weights_exact(const Dataset& ds, const QFn& q,
                                const ActionProbsFn& behavior_probs,
                                const FilterConfig& cfg) {
  WeightVector w(ds.size(), 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Transition& t = ds[i];
    const std::vector<double> probs = behavior_probs(t.state);
    std::vector<double> values(probs.size());
    for (std::size_t a = 0; a < probs.size(); ++a) {
      values[a] = q(t.state, static_cast<double>(a));
    }
    const double v_tau = weighted_quantile(values, probs, cfg.tau);
    const double qi = q(t.state, t.action);
    w[i] = (cfg.geq ? qi >= v_tau : qi > v_tau) ? 1.0 : 0.0;
  }
  return w;
}

WeightVector qfil_weights(const Dataset& ds, const QNetwork& q, const Policy& behavior,
                          const FilterConfig& cfg, RngStream& rng) {
  if (cfg.exact_actions && ds.env().action_kind == EnvInfo::ActionKind::kDiscrete) {
    return qfil_weights_exact(ds, q.as_fn(), [&](std::span<const double> state) {
      return behavior.categorical_head(state).probs();
    }, cfg);
  }
  return qfil_weights(ds, q.as_fn(), behavior.sampler(), cfg, rng);
}

WeightVector expadv_weights(const Dataset& ds, const QFn& q,
                            const PolicySampleFn& behavior, double alpha, double clip,
                            int value_samples, RngStream& rng) {
  if (!(alpha > 0.0)) throw std::invalid_argument("expadv_weights: alpha must be positive");
  if (!(clip > 0.0)) throw std::invalid_argument("expadv_weights: clip must be positive");
  WeightVector w(ds.size(), 0.0);
  const double log_clip = std::log(clip);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Transition& t = ds[i];
    const PushforwardSamples ps = pushforward(q, behavior, t.state, value_samples, rng);
    const double v = std::accumulate(ps.values.begin(), ps.values.end(), 0.0) /
                     static_cast<double>(ps.values.size());
    const double adv = alpha * (q(t.state, t.action) - v);
    w[i] = adv >= log_clip ? clip : std::exp(adv);
  }
  return w;
}

WeightVector pctbc_weights(const Dataset& ds, double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw std::invalid_argument("pctbc_weights: keep_fraction must lie in (0, 1]");
  }
  const std::vector<double>& returns = ds.episode_returns();
  const std::size_t n_ep = returns.size();
  std::vector<std::size_t> order(n_ep);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return returns[a] > returns[b];  // stable: earlier episodes win ties
  });
  const std::size_t keep = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(n_ep))), 1, n_ep);
  std::vector<char> kept(n_ep, 0);
  for (std::size_t i = 0; i < keep; ++i) kept[order[i]] = 1;
  WeightVector w(ds.size(), 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    w[i] = kept[static_cast<std::size_t>(ds[i].episode)] ? 1.0 : 0.0;
  }
  return w;
}

Policy weighted_imitation(const Dataset& ds, const WeightVector* weights, Policy init,
                          const TrainHyper& hyper, RngStream& batch_rng,
                          const WeightRefreshFn& refresh, TrainTrace* trace) {
  if (ds.empty()) throw std::invalid_argument("weighted_imitation: empty dataset");
  WeightVector current;
  const WeightVector* active = nullptr;
  if (weights) {
    if (weights->size() != ds.size()) {
      throw std::invalid_argument("weighted_imitation: weight vector size mismatch");
    }
    if (std::none_of(weights->begin(), weights->end(), [](double w) { return w > 0.0; })) {
      throw std::invalid_argument(
          "weighted_imitation: all weights are zero; try a lower tau");
    }
    current = *weights;
    active = &current;
  }
  PolicyTrainState st(std::move(init), hyper.lr);
  const std::size_t epoch = steps_per_epoch(ds.size(), hyper.batch);
  for (int step = 0; step < hyper.steps; ++step) {
    if (refresh && step > 0 && step % epoch == 0) {
      WeightVector next = refresh();
      if (std::any_of(next.begin(), next.end(), [](double w) { return w > 0.0; })) {
        current = std::move(next);
      } else if (trace) {
        ++trace->empty_weight_refreshes;
      }
    }
    const auto idx = ds.sample_indices(hyper.batch, batch_rng);
    const double loss = policy_nll_step(st, ds, idx, active);
    trace_loss(trace, step, loss);
  }
  return std::move(st.policy);
}

void export_weights_csv(const std::filesystem::path& path, const Dataset& ds,
                        const WeightVector& weights, const std::vector<double>& q_values,
                        const std::vector<double>& v_values) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("weights csv: cannot open " + path.string());
  os << "row,q,v_tau,weight\n";
  os.precision(17);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    os << i << ',' << (i < q_values.size() ? q_values[i] : 0.0) << ','
       << (i < v_values.size() ? v_values[i] : 0.0) << ',' << weights[i] << '\n';
  }
}

}  // namespace qfil
