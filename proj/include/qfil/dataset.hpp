#ifndef QFIL_DATASET_HPP_
#define QFIL_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qfil/rng.hpp"

namespace qfil {

// Environment descriptor carried by datasets and checkpoints.
struct EnvInfo {
  enum class ActionKind : std::uint8_t { kContinuous = 0, kDiscrete = 1 };

  std::string name;
  int state_dim = 1;          // raw stored state dimension
  ActionKind action_kind = ActionKind::kContinuous;
  double action_lo = 0.0;     // continuous bounds
  double action_hi = 1.0;
  int num_actions = 0;        // discrete action count
  int one_hot_states = 0;     // >0: network features are a one-hot of this size

  int feature_dim() const { return one_hot_states > 0 ? one_hot_states : state_dim; }
  int action_feature_dim() const {
    return action_kind == ActionKind::kDiscrete ? num_actions : 1;
  }
  bool operator==(const EnvInfo&) const = default;
};

// Network input features for a raw stored state.
std::vector<double> encode_state(const EnvInfo& env, std::span<const double> raw);
// Features for (state, action), used by Q networks.
std::vector<double> encode_state_action(const EnvInfo& env, std::span<const double> raw,
                                        double action);

struct Transition {
  std::vector<double> state;
  double action = 0.0;
  double reward = 0.0;
  std::vector<double> next_state;
  std::optional<double> next_action;  // present iff not done
  bool done = false;
  std::int64_t episode = 0;
};

// Immutable offline transition store with per-episode bookkeeping.
class Dataset {
 public:
  Dataset(EnvInfo env, std::vector<Transition> rows);

  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const Transition& operator[](std::size_t i) const { return rows_[i]; }
  const std::vector<Transition>& rows() const { return rows_; }
  const EnvInfo& env() const { return env_; }

  std::int64_t num_episodes() const { return static_cast<std::int64_t>(episode_returns_.size()); }
  // Undiscounted per-episode returns, in episode order.
  const std::vector<double>& episode_returns() const { return episode_returns_; }

  // n i.i.d. uniform draws with replacement.
  std::vector<std::size_t> sample_indices(std::size_t n, RngStream& rng) const;
  std::vector<Transition> sample_batch(std::size_t n, RngStream& rng) const;

  void save(const std::filesystem::path& path) const;
  static Dataset load(const std::filesystem::path& path);
  void export_csv(const std::filesystem::path& path) const;

 private:
  EnvInfo env_;
  std::vector<Transition> rows_;
  std::vector<double> episode_returns_;
};

// One nonnegative weight per transition; filters produce these.
using WeightVector = std::vector<double>;

}  // namespace qfil

#endif  // QFIL_DATASET_HPP_
