#include "qfil/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace qfil {

std::vector<double> encode_state(const EnvInfo& env, std::span<const double> raw) {
  if (static_cast<int>(raw.size()) != env.state_dim) {
    throw std::invalid_argument("encode_state: raw state dimension mismatch");
  }
  if (env.one_hot_states <= 0) return {raw.begin(), raw.end()};
  std::vector<double> f(env.one_hot_states, 0.0);
  const int idx = static_cast<int>(raw[0]);
  if (idx < 0 || idx >= env.one_hot_states) {
    throw std::invalid_argument("encode_state: state index out of range");
  }
  f[idx] = 1.0;
  return f;
}

std::vector<double> encode_state_action(const EnvInfo& env, std::span<const double> raw,
                                        double action) {
  std::vector<double> f = encode_state(env, raw);
  if (env.action_kind == EnvInfo::ActionKind::kDiscrete) {
    const int a = static_cast<int>(action);
    if (a < 0 || a >= env.num_actions) {
      throw std::invalid_argument("encode_state_action: action index out of range");
    }
    std::vector<double> onehot(env.num_actions, 0.0);
    onehot[a] = 1.0;
    f.insert(f.end(), onehot.begin(), onehot.end());
  } else {
    f.push_back(action);
  }
  return f;
}

namespace {

void validate_row(const EnvInfo& env, const Transition& t, std::size_t index) {
  const auto fail = [&](const std::string& what) {
    throw std::invalid_argument("dataset record " + std::to_string(index) + ": " + what);
  };
  if (!std::isfinite(t.reward)) fail("non-finite reward");
  if (static_cast<int>(t.state.size()) != env.state_dim) fail("bad state dimension");
  if (static_cast<int>(t.next_state.size()) != env.state_dim) fail("bad next-state dimension");
  for (double v : t.state)
    if (!std::isfinite(v)) fail("non-finite state");
  for (double v : t.next_state)
    if (!std::isfinite(v)) fail("non-finite next state");
  if (env.action_kind == EnvInfo::ActionKind::kContinuous) {
    if (!(t.action >= env.action_lo && t.action <= env.action_hi)) {
      fail("action outside bounds");
    }
  } else {
    const int a = static_cast<int>(t.action);
    if (a < 0 || a >= env.num_actions || t.action != a) fail("bad discrete action");
  }
  if (t.done == t.next_action.has_value()) {
    fail(t.done ? "terminal row carries a next action" : "non-terminal row missing next action");
  }
}

}  // namespace

Dataset::Dataset(EnvInfo env, std::vector<Transition> rows)
    : env_(std::move(env)), rows_(std::move(rows)) {
  std::int64_t last_episode = -1;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    validate_row(env_, rows_[i], i);
    const std::int64_t ep = rows_[i].episode;
    if (ep != last_episode && ep != last_episode + 1) {
      throw std::invalid_argument("dataset record " + std::to_string(i) +
                                  ": episode ids must be contiguous");
    }
    if (ep == last_episode + 1) {
      episode_returns_.push_back(0.0);
      last_episode = ep;
    }
    episode_returns_.back() += rows_[i].reward;
  }
}

std::vector<std::size_t> Dataset::sample_indices(std::size_t n, RngStream& rng) const {
  if (rows_.empty()) throw std::invalid_argument("sample_indices: empty dataset");
  if (n == 0) throw std::invalid_argument("sample_indices: n must be positive");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = rng.uniform_index(rows_.size());
  return idx;
}

std::vector<Transition> Dataset::sample_batch(std::size_t n, RngStream& rng) const {
  std::vector<Transition> batch;
  batch.reserve(n);
  for (std::size_t i : sample_indices(n, rng)) batch.push_back(rows_[i]);
  return batch;
}

namespace {

constexpr char kDsMagic[8] = {'Q', 'F', 'D', 'S', '0', '0', '0', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* ctx) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error(std::string("dataset file: truncated ") + ctx);
  return v;
}

}  // namespace

void Dataset::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("dataset save: cannot open " + path.string());
  os.write(kDsMagic, sizeof(kDsMagic));
  write_pod(os, static_cast<std::uint32_t>(env_.name.size()));
  os.write(env_.name.data(), static_cast<std::streamsize>(env_.name.size()));
  write_pod(os, static_cast<std::uint8_t>(env_.action_kind));
  write_pod(os, static_cast<std::int32_t>(env_.state_dim));
  write_pod(os, static_cast<std::int32_t>(env_.num_actions));
  write_pod(os, static_cast<std::int32_t>(env_.one_hot_states));
  write_pod(os, env_.action_lo);
  write_pod(os, env_.action_hi);
  write_pod(os, static_cast<std::uint64_t>(rows_.size()));
  for (const Transition& t : rows_) {
    write_pod(os, t.episode);
    write_pod(os, static_cast<std::uint8_t>(t.done));
    write_pod(os, static_cast<std::uint8_t>(t.next_action.has_value()));
    write_pod(os, t.action);
    write_pod(os, t.reward);
    for (double v : t.state) write_pod(os, v);
    for (double v : t.next_state) write_pod(os, v);
    if (t.next_action) write_pod(os, *t.next_action);
  }
  if (!os) throw std::runtime_error("dataset save: write failed for " + path.string());
}

Dataset Dataset::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("dataset load: cannot open " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kDsMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("dataset load: bad magic in " + path.string());
  }
  EnvInfo env;
  const auto name_len = read_pod<std::uint32_t>(is, "header");
  env.name.resize(name_len);
  is.read(env.name.data(), name_len);
  env.action_kind = static_cast<EnvInfo::ActionKind>(read_pod<std::uint8_t>(is, "header"));
  env.state_dim = read_pod<std::int32_t>(is, "header");
  env.num_actions = read_pod<std::int32_t>(is, "header");
  env.one_hot_states = read_pod<std::int32_t>(is, "header");
  env.action_lo = read_pod<double>(is, "header");
  env.action_hi = read_pod<double>(is, "header");
  const auto count = read_pod<std::uint64_t>(is, "header");
  std::vector<Transition> rows;
  rows.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string ctx = "record " + std::to_string(i);
    Transition t;
    t.episode = read_pod<std::int64_t>(is, ctx.c_str());
    t.done = read_pod<std::uint8_t>(is, ctx.c_str()) != 0;
    const bool has_na = read_pod<std::uint8_t>(is, ctx.c_str()) != 0;
    t.action = read_pod<double>(is, ctx.c_str());
    t.reward = read_pod<double>(is, ctx.c_str());
    t.state.resize(env.state_dim);
    for (double& v : t.state) v = read_pod<double>(is, ctx.c_str());
    t.next_state.resize(env.state_dim);
    for (double& v : t.next_state) v = read_pod<double>(is, ctx.c_str());
    if (has_na) t.next_action = read_pod<double>(is, ctx.c_str());
    rows.push_back(std::move(t));
  }
  // Constructor re-validates every record and recomputes episode returns.
  return Dataset(std::move(env), std::move(rows));
}

void Dataset::export_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("csv export: cannot open " + path.string());
  os << "episode,done";
  for (int d = 0; d < env_.state_dim; ++d) os << ",s" << d;
  os << ",action,reward";
  for (int d = 0; d < env_.state_dim; ++d) os << ",next_s" << d;
  os << ",next_action\n";
  os.precision(17);
  for (const Transition& t : rows_) {
    os << t.episode << ',' << (t.done ? 1 : 0);
    for (double v : t.state) os << ',' << v;
    os << ',' << t.action << ',' << t.reward;
    for (double v : t.next_state) os << ',' << v;
    os << ',';
    if (t.next_action) os << *t.next_action;
    os << '\n';
  }
}

}  // namespace qfil
