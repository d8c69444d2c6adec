#include "qfil/envs.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace qfil {

EnvInfo BanditEnv::info() {
  EnvInfo e;
  e.name = "bandit";
  e.state_dim = 1;
  e.action_kind = EnvInfo::ActionKind::kContinuous;
  e.action_lo = kLo;
  e.action_hi = kHi;
  return e;
}

double BanditEnv::reward(double s, double a) {
  if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("bandit reward: s outside [0,1]");
  if (!(a >= kLo && a <= kHi)) throw std::invalid_argument("bandit reward: a outside [0,1]");
  const double band_lo = s / 2.0;
  const double band_hi = (s + 1.0) / 2.0;
  if (a >= band_lo && a <= band_hi) return 1.0 - std::abs(a - (1.0 - s));
  return -1.0;
}

double BanditEnv::behavior_action(double s, RngStream& rng) {
  return (s + rng.uniform()) / 2.0;
}

Dataset BanditEnv::generate(std::size_t n, RngStream& rng) {
  if (n == 0) throw std::invalid_argument("bandit generate: n must be positive");
  std::vector<Transition> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Transition t;
    const double s = rng.uniform();
    const double a = behavior_action(s, rng);
    t.state = {s};
    t.action = a;
    t.reward = reward(s, a);
    t.next_state = {0.0};
    t.done = true;
    t.episode = static_cast<std::int64_t>(i);
    rows.push_back(std::move(t));
  }
  return Dataset(info(), std::move(rows));
}

EvalResult bandit_eval(const SampleActionFn& sample, const ModalActionFn& modal,
                       std::size_t n_states, RngStream& rng, EvalMode mode) {
  if (n_states == 0) throw std::invalid_argument("bandit_eval: n_states must be positive");
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < n_states; ++i) {
    const double s = rng.uniform();
    const double state[1] = {s};
    const double a = mode == EvalMode::kSampled ? sample(state, rng) : modal(state);
    const double r = BanditEnv::reward(s, a);
    sum += r;
    sumsq += r * r;
  }
  EvalResult out;
  out.n = n_states;
  out.mean = sum / static_cast<double>(n_states);
  const double var =
      std::max(0.0, sumsq / static_cast<double>(n_states) - out.mean * out.mean);
  out.stderr_mean = std::sqrt(var / static_cast<double>(n_states));
  return out;
}

GridMdp GridMdp::make_default() {
  GridMdp g;
  g.width_ = 8;
  g.height_ = 8;
  g.gamma_ = 0.99;
  g.start_ = 0;
  g.goal_ = g.width_ * g.height_ - 1;
  g.wall_.assign(g.num_states(), false);
  g.rebuild_distances();
  return g;
}

GridMdp GridMdp::from_map_text(const std::string& text, double gamma) {
  std::vector<std::string> lines;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) {
    if (line.empty() || line[0] == ';') continue;  // ';' lines are comments
    lines.push_back(line);
  }
  if (lines.empty()) throw std::runtime_error("grid map: empty map");
  GridMdp g;
  g.height_ = static_cast<int>(lines.size());
  g.width_ = static_cast<int>(lines[0].size());
  g.gamma_ = gamma;
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("grid map: gamma must be in (0,1)");
  g.wall_.assign(g.width_ * g.height_, false);
  int start = -1, goal = -1;
  for (int y = 0; y < g.height_; ++y) {
    if (static_cast<int>(lines[y].size()) != g.width_) {
      throw std::runtime_error("grid map: ragged row " + std::to_string(y));
    }
    for (int x = 0; x < g.width_; ++x) {
      const int s = y * g.width_ + x;
      switch (lines[y][x]) {
        case '.': break;
        case '#': g.wall_[s] = true; break;
        case 'S': start = s; break;
        case 'G': goal = s; break;
        default:
          throw std::runtime_error(std::string("grid map: unknown glyph '") + lines[y][x] + "'");
      }
    }
  }
  if (start < 0 || goal < 0) throw std::runtime_error("grid map: needs one S and one G");
  g.start_ = start;
  g.goal_ = goal;
  g.rebuild_distances();
  if (g.dist_to_goal_[g.start_] < 0) throw std::runtime_error("grid map: goal unreachable from start");
  return g;
}

std::string GridMdp::to_map_text() const {
  std::string out;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const int s = y * width_ + x;
      char c = '.';
      if (wall_[s]) c = '#';
      if (s == start_) c = 'S';
      if (s == goal_) c = 'G';
      out += c;
    }
    out += '\n';
  }
  return out;
}

EnvInfo GridMdp::info() const {
  EnvInfo e;
  e.name = "grid" + std::to_string(width_) + "x" + std::to_string(height_);
  e.state_dim = 1;
  e.action_kind = EnvInfo::ActionKind::kDiscrete;
  e.num_actions = kNumActions;
  e.one_hot_states = num_states();
  return e;
}

namespace {
constexpr int kDx[4] = {0, 1, 0, -1};
constexpr int kDy[4] = {-1, 0, 1, 0};
}  // namespace

int GridMdp::step(int s, int a) const {
  if (a < 0 || a >= kNumActions) throw std::invalid_argument("grid step: bad action");
  const int x = s % width_;
  const int y = s / width_;
  const int nx = x + kDx[a];
  const int ny = y + kDy[a];
  if (nx < 0 || nx >= width_ || ny < 0 || ny >= height_) return s;
  const int ns = ny * width_ + nx;
  return wall_[ns] ? s : ns;
}

double GridMdp::reward(int s, int a) const {
  return (!is_terminal(s) && step(s, a) == goal_) ? 1.0 : 0.0;
}

void GridMdp::rebuild_distances() {
  dist_to_goal_.assign(num_states(), -1);
  std::deque<int> q;
  dist_to_goal_[goal_] = 0;
  q.push_back(goal_);
  while (!q.empty()) {
    const int s = q.front();
    q.pop_front();
    for (int a = 0; a < kNumActions; ++a) {
      // step() is symmetric on this move set, so neighbors of s are steps.
      const int n = step(s, a);
      if (n != s && dist_to_goal_[n] < 0) {
        dist_to_goal_[n] = dist_to_goal_[s] + 1;
        q.push_back(n);
      }
    }
  }
}

int GridMdp::shortest_path_action(int s) const {
  int best_a = 0;
  int best_d = dist_to_goal_[s] < 0 ? num_states() : dist_to_goal_[s];
  for (int a = 0; a < kNumActions; ++a) {
    const int n = step(s, a);
    if (n == s || dist_to_goal_[n] < 0) continue;
    if (dist_to_goal_[n] < best_d) {
      best_d = dist_to_goal_[n];
      best_a = a;
    }
  }
  return best_a;
}

std::array<double, GridMdp::kNumActions> GridMdp::behavior_probs(int s) const {
  std::array<double, kNumActions> p;
  p.fill(0.5 / kNumActions);
  p[shortest_path_action(s)] += 0.5;
  return p;
}

TabularPolicy grid_behavior_policy(const GridMdp& mdp) {
  TabularPolicy pol(mdp.num_states());
  for (int s = 0; s < mdp.num_states(); ++s) pol[s] = mdp.behavior_probs(s);
  return pol;
}

std::vector<Transition> grid_rollout(const GridMdp& mdp, const SampleActionFn& policy,
                                     RngStream& rng, int max_steps) {
  std::vector<Transition> rows;
  int s = mdp.start_state();
  double state_buf[1];
  state_buf[0] = static_cast<double>(s);
  int a = static_cast<int>(policy(state_buf, rng));
  for (int t = 0; t < max_steps && !mdp.is_terminal(s); ++t) {
    const int ns = mdp.step(s, a);
    Transition row;
    row.state = {static_cast<double>(s)};
    row.action = static_cast<double>(a);
    row.reward = mdp.reward(s, a);
    row.next_state = {static_cast<double>(ns)};
    row.done = mdp.is_terminal(ns);
    if (!row.done) {
      state_buf[0] = static_cast<double>(ns);
      a = static_cast<int>(policy(state_buf, rng));
      row.next_action = static_cast<double>(a);
    }
    rows.push_back(std::move(row));
    s = ns;
  }
  return rows;
}

Dataset grid_generate(const GridMdp& mdp, std::size_t n_episodes, RngStream& rng,
                      int max_steps) {
  if (n_episodes == 0) throw std::invalid_argument("grid_generate: n_episodes must be positive");
  const SampleActionFn behavior = [&mdp](std::span<const double> state, RngStream& r) {
    const auto p = mdp.behavior_probs(static_cast<int>(state[0]));
    const double u = r.uniform();
    double cum = 0.0;
    for (int a = 0; a < GridMdp::kNumActions - 1; ++a) {
      cum += p[a];
      if (u < cum) return static_cast<double>(a);
    }
    return static_cast<double>(GridMdp::kNumActions - 1);
  };
  std::vector<Transition> rows;
  for (std::size_t ep = 0; ep < n_episodes; ++ep) {
    std::vector<Transition> episode = grid_rollout(mdp, behavior, rng, max_steps);
    for (Transition& t : episode) {
      t.episode = static_cast<std::int64_t>(ep);
      rows.push_back(std::move(t));
    }
  }
  return Dataset(mdp.info(), std::move(rows));
}

GridEvalResult grid_exact_eval(const GridMdp& mdp, const TabularPolicy& policy) {
  const int n = mdp.num_states();
  if (static_cast<int>(policy.size()) != n) {
    throw std::invalid_argument("grid_exact_eval: policy must cover all states");
  }
  // Solve (I - gamma * P_pi) V = r_pi over non-terminal, non-wall states.
  std::vector<int> sys_index(n, -1);
  std::vector<int> states;
  for (int s = 0; s < n; ++s) {
    if (mdp.is_terminal(s) || mdp.is_wall(s)) continue;
    sys_index[s] = static_cast<int>(states.size());
    states.push_back(s);
  }
  const int m = static_cast<int>(states.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < m; ++i) {
    const int s = states[i];
    for (int a = 0; a < GridMdp::kNumActions; ++a) {
      const double pa = policy[s][a];
      if (pa == 0.0) continue;
      b[i] += pa * mdp.reward(s, a);
      const int ns = mdp.step(s, a);
      if (sys_index[ns] >= 0) A(i, sys_index[ns]) -= mdp.gamma() * pa;
    }
  }
  const Eigen::VectorXd v = A.partialPivLu().solve(b);
  GridEvalResult out;
  out.v.assign(n, 0.0);
  for (int i = 0; i < m; ++i) out.v[states[i]] = v[i];
  out.q.assign(n, {0.0, 0.0, 0.0, 0.0});
  for (int s = 0; s < n; ++s) {
    if (mdp.is_terminal(s) || mdp.is_wall(s)) continue;
    for (int a = 0; a < GridMdp::kNumActions; ++a) {
      const int ns = mdp.step(s, a);
      out.q[s][a] = mdp.reward(s, a) + mdp.gamma() * out.v[ns];
    }
  }
  out.j = out.v[mdp.start_state()];
  return out;
}

EvalResult grid_mc_eval(const GridMdp& mdp, const SampleActionFn& policy,
                        std::size_t episodes, RngStream& rng, int max_steps) {
  if (episodes == 0) throw std::invalid_argument("grid_mc_eval: episodes must be positive");
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    int s = mdp.start_state();
    double g = 0.0, discount = 1.0;
    double state_buf[1];
    for (int t = 0; t < max_steps && !mdp.is_terminal(s); ++t) {
      state_buf[0] = static_cast<double>(s);
      const int a = static_cast<int>(policy(state_buf, rng));
      g += discount * mdp.reward(s, a);
      discount *= mdp.gamma();
      s = mdp.step(s, a);
    }
    sum += g;
    sumsq += g * g;
  }
  EvalResult out;
  out.n = episodes;
  out.mean = sum / static_cast<double>(episodes);
  const double var = std::max(0.0, sumsq / static_cast<double>(episodes) - out.mean * out.mean);
  out.stderr_mean = std::sqrt(var / static_cast<double>(episodes));
  return out;
}

}  // namespace qfil
