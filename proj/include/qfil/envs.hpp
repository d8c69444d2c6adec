#ifndef QFIL_ENVS_HPP_
#define QFIL_ENVS_HPP_

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qfil/dataset.hpp"
#include "qfil/rng.hpp"

namespace qfil {

// Generic policy hooks so environments do not depend on network code.
using SampleActionFn = std::function<double(std::span<const double> state, RngStream&)>;
using ModalActionFn = std::function<double(std::span<const double> state)>;

enum class EvalMode { kSampled, kModal };

struct EvalResult {
  double mean = 0.0;
  double stderr_mean = 0.0;
  std::size_t n = 0;
};

// Horizon-1 contextual bandit on s, a in [0,1]. The behavior draws
// a = (s + eps)/2 with eps ~ U[0,1], so its support is exactly the band
// [s/2, (s+1)/2]; rewards outside the band are -1.
struct BanditEnv {
  static constexpr double kLo = 0.0;
  static constexpr double kHi = 1.0;

  static EnvInfo info();
  // 1 - |a - (1-s)| inside the closed band [s/2, (s+1)/2], else -1.
  static double reward(double s, double a);
  static double behavior_action(double s, RngStream& rng);
  static Dataset generate(std::size_t n, RngStream& rng);
};

EvalResult bandit_eval(const SampleActionFn& sample, const ModalActionFn& modal,
                       std::size_t n_states, RngStream& rng, EvalMode mode);

// Deterministic four-action gridworld with wall self-transitions and a
// single terminal goal cell paying reward 1 on entry.
class GridMdp {
 public:
  static constexpr int kNumActions = 4;  // up, right, down, left

  static GridMdp make_default();  // 8x8, gamma 0.99, start (0,0), goal (7,7)
  static GridMdp from_map_text(const std::string& text, double gamma);
  std::string to_map_text() const;

  EnvInfo info() const;
  int width() const { return width_; }
  int height() const { return height_; }
  int num_states() const { return width_ * height_; }
  double gamma() const { return gamma_; }
  int start_state() const { return start_; }
  int goal_state() const { return goal_; }
  bool is_wall(int s) const { return wall_[s]; }
  bool is_terminal(int s) const { return s == goal_; }

  int step(int s, int a) const;       // wall or boundary bump: stays at s
  double reward(int s, int a) const;  // 1 when step(s, a) enters the goal

  // 0.5-greedy mixture of a shortest-path policy and uniform random.
  std::array<double, kNumActions> behavior_probs(int s) const;
  int shortest_path_action(int s) const;

 private:
  GridMdp() = default;
  void rebuild_distances();

  int width_ = 0, height_ = 0;
  double gamma_ = 0.99;
  int start_ = 0, goal_ = 0;
  std::vector<bool> wall_;
  std::vector<int> dist_to_goal_;  // BFS distances over non-wall cells
};

// Discrete-policy hook for tabular work: action probabilities per state.
using TabularPolicy = std::vector<std::array<double, GridMdp::kNumActions>>;

// One behavior/policy-driven episode; rows carry the realized next action
// (an extra draw for rows truncated by max_steps).
std::vector<Transition> grid_rollout(const GridMdp& mdp, const SampleActionFn& policy,
                                     RngStream& rng, int max_steps);
Dataset grid_generate(const GridMdp& mdp, std::size_t n_episodes, RngStream& rng,
                      int max_steps = 200);

struct GridEvalResult {
  double j = 0.0;                               // start-state value
  std::vector<double> v;                        // per state
  std::vector<std::array<double, 4>> q;         // per state, per action
};

// Exact discounted policy evaluation via a dense linear solve of the
// Bellman equations. The policy must be defined on all non-terminal states.
GridEvalResult grid_exact_eval(const GridMdp& mdp, const TabularPolicy& policy);

// Monte Carlo discounted return from the start state, for cross-checks.
EvalResult grid_mc_eval(const GridMdp& mdp, const SampleActionFn& policy,
                        std::size_t episodes, RngStream& rng, int max_steps = 1000);

TabularPolicy grid_behavior_policy(const GridMdp& mdp);

}  // namespace qfil

#endif  // QFIL_ENVS_HPP_
