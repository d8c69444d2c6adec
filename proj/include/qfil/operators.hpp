#ifndef QFIL_OPERATORS_HPP_
#define QFIL_OPERATORS_HPP_

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qfil/dataset.hpp"
#include "qfil/policy.hpp"
#include "qfil/quantile.hpp"

namespace qfil {

struct TrainHyper {
  int steps = 1000;
  int batch = 64;
  double lr = 1e-3;
};

struct TrainTrace {
  std::vector<double> losses;   // one entry per trace_every steps
  int trace_every = 50;
  int empty_weight_refreshes = 0;
};

class TrainError : public std::runtime_error {
 public:
  TrainError(const std::string& stage, std::int64_t step, const std::string& what)
      : std::runtime_error(stage + " step " + std::to_string(step) + ": " + what),
        stage_(stage),
        step_(step) {}
  const std::string& stage() const { return stage_; }
  std::int64_t step() const { return step_; }

 private:
  std::string stage_;
  std::int64_t step_;
};

enum class FilterVariant { kNone, kQfil, kExpAdv, kPctBc };

struct FilterConfig {
  FilterVariant variant = FilterVariant::kNone;
  // qfil
  double tau = 0.9;
  int quantile_samples = 100;
  bool geq = false;            // use ">=" instead of the default strict ">"
  bool cache_weights = false;  // compute once instead of refreshing per epoch
  bool exact_actions = false;  // enumerate finite action sets instead of sampling
  // exponentiated advantage
  double alpha = 1.0;
  double clip = 100.0;
  int value_samples = 10;
  // top-return behavior cloning
  double keep_fraction = 0.1;
};

// Incremental trainers so drivers can interleave steps.
struct PolicyTrainState {
  Policy policy;
  OptState opt;
  std::int64_t steps_done = 0;

  PolicyTrainState(Policy p, double lr)
      : policy(std::move(p)), opt(OptState::create(policy.params(), lr)) {}
};

struct QTrainState {
  QNetwork q;
  OptState opt;
  std::int64_t steps_done = 0;
  int target_every = 2;       // target refresh cadence in gradient steps
  double target_rate = 0.005; // exponential moving average rate

  QTrainState(QNetwork net, double lr)
      : q(std::move(net)), opt(OptState::create(q.params(), lr)) {}
};

// One minibatch step on the (weighted) negative log likelihood; returns the
// batch loss. Throws TrainError on non-finite loss.
double policy_nll_step(PolicyTrainState& st, const Dataset& ds,
                       std::span<const std::size_t> idx, const WeightVector* weights);

// One minibatch step on the on-policy bootstrap residual with the dataset's
// own next actions; terminal rows bootstrap to zero.
double q_sarsa_step(QTrainState& st, const Dataset& ds,
                    std::span<const std::size_t> idx, double gamma);

// Same residual with the next action resampled from pi at every step.
double q_backup_offpolicy_step(QTrainState& st, const Dataset& ds,
                               std::span<const std::size_t> idx, const Policy& pi,
                               double gamma, RngStream& action_rng);

// Behavior cloning: maximum likelihood on the full dataset.
Policy fit_behavior(const Dataset& ds, const TrainHyper& hyper, RngStream& init_rng,
                    RngStream& batch_rng, TrainTrace* trace = nullptr);

// Fitted Q on the dataset's own (s', a') with a frozen EMA target network.
QNetwork fit_q_sarsa(const Dataset& ds, const TrainHyper& hyper, double gamma,
                     RngStream& init_rng, RngStream& batch_rng,
                     TrainTrace* trace = nullptr);

// 0/1 weights: keep rows whose Q value beats the tau quantile of the
// pushforward of behavior samples through q at the row's state.
WeightVector qfil_weights(const Dataset& ds, const QFn& q,
                          const PolicySampleFn& behavior, const FilterConfig& cfg,
                          RngStream& rng);
// Exact all-actions variant for finite action sets.
using ActionProbsFn = std::function<std::vector<double>(std::span<const double> state)>;
WeightVector qfil_weights_exact(const Dataset& ds, const QFn& q,
                                const ActionProbsFn& behavior_probs,
                                const FilterConfig& cfg);
WeightVector qfil_weights(const Dataset& ds, const QNetwork& q, const Policy& behavior,
                          const FilterConfig& cfg, RngStream& rng);

// min(exp(alpha * (Q - V)), clip) with V the mean of `value_samples`
// pushforward draws.
WeightVector expadv_weights(const Dataset& ds, const QFn& q,
                            const PolicySampleFn& behavior, double alpha, double clip,
                            int value_samples, RngStream& rng);

// Keep every transition of the top keep_fraction of episodes by return;
// ties broken toward earlier episode ids.
WeightVector pctbc_weights(const Dataset& ds, double keep_fraction);

// Weighted imitation from an initial policy. `refresh` (optional) is called
// at each epoch boundary to recompute weights; a refresh that zeroes every
// weight is skipped and counted in the trace.
using WeightRefreshFn = std::function<WeightVector()>;
Policy weighted_imitation(const Dataset& ds, const WeightVector* weights, Policy init,
                          const TrainHyper& hyper, RngStream& batch_rng,
                          const WeightRefreshFn& refresh = nullptr,
                          TrainTrace* trace = nullptr);

// Rows per epoch under uniform-with-replacement batching.
std::size_t steps_per_epoch(std::size_t dataset_size, int batch);

void export_weights_csv(const std::filesystem::path& path, const Dataset& ds,
                        const WeightVector& weights, const std::vector<double>& q_values,
                        const std::vector<double>& v_values);

}  // namespace qfil

#endif  // QFIL_OPERATORS_HPP_
