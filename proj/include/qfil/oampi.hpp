#ifndef QFIL_OAMPI_HPP_
#define QFIL_OAMPI_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qfil/envs.hpp"
#include "qfil/operators.hpp"

namespace qfil {

enum class Regime { kOneStep, kIterative };

struct RunConfig {
  std::string env = "bandit";  // "bandit" or "grid8"
  std::size_t data_n = 10000;  // bandit transitions, or gridworld episodes
  std::uint64_t seed = 1;
  Regime regime = Regime::kOneStep;
  FilterConfig filter;

  TrainHyper behavior_hyper{1000, 64, 1e-3};
  TrainHyper q_hyper{1000, 64, 1e-3};
  TrainHyper policy_hyper{1000, 64, 1e-3};

  // Iterative regime: one policy step + two off-policy Q steps per unit.
  int iterative_units = 10000;
  int eval_snapshots = 10;
  bool warm_start_q = true;  // initialize the off-policy Q at the SARSA Q

  double gamma = 0.99;
  int grid_max_steps = 200;
  int eval_states = 100;  // bandit evaluation states
  EvalMode eval_mode = EvalMode::kModal;
  bool compute_diagnostics = false;

  // Canonical key=value string of every field except the seed; the hash
  // identifies a sweep cell across runs.
  std::string canonical_string() const;
  std::string config_hash() const;
};

struct RunResult {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string env;
  std::size_t data_n = 0;
  std::string variant;
  double tau = 0.0;
  std::string regime;

  bool failed = false;
  std::string error;

  double mean_return = 0.0;
  double stderr_return = 0.0;
  double behavior_return = 0.0;
  double keep_rate = 0.0;
  std::vector<double> keep_rate_trace;
  std::vector<double> eval_trace;  // iterative snapshots of the learned policy
  std::optional<double> w1_term;
  double wall_seconds = 0.0;
};

RunResult run_one_step(const RunConfig& cfg);
RunResult run_iterative(const RunConfig& cfg);
// Dispatches on cfg.regime; never throws, failures land in the result.
RunResult run_config(const RunConfig& cfg);

// Runs every (config, seed) pair on a worker pool. Results arrive in
// deterministic order (configs outer, seeds inner) regardless of scheduling.
std::vector<RunResult> sweep(const std::vector<RunConfig>& grid,
                             const std::vector<std::uint64_t>& seeds, int workers);

struct CellStats {
  std::string config_hash;
  std::size_t n_runs = 0;
  std::size_t n_failed = 0;
  double mean = 0.0;  // across-seed mean of mean_return
  double stddev = 0.0;
  double stderr_mean = 0.0;
};
CellStats aggregate_cell(const std::vector<RunResult>& results, const std::string& config_hash);

}  // namespace qfil

#endif  // QFIL_OAMPI_HPP_
