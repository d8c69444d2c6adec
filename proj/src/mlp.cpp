#include "qfil/mlp.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace qfil {

namespace {

void check_shape(const MlpShape& s) {
  if (s.in_dim <= 0 || s.out_dim <= 0 || s.width <= 0 || s.depth < 0) {
    throw std::invalid_argument("MlpShape: dimensions must be positive");
  }
}

}  // namespace

MlpParams MlpParams::init(const MlpShape& shape, RngStream& rng) {
  check_shape(shape);
  MlpParams p;
  p.shape = shape;
  p.weights.resize(shape.num_layers());
  p.biases.resize(shape.num_layers());
  for (int k = 0; k < shape.num_layers(); ++k) {
    const int fan_in = shape.layer_in(k);
    const int fan_out = shape.layer_out(k);
    const bool hidden = k < shape.depth;
    const double bound = hidden ? std::sqrt(6.0 / fan_in) : 1.0 / std::sqrt(fan_in);
    p.weights[k].resize(static_cast<std::size_t>(fan_out) * fan_in);
    for (double& w : p.weights[k]) w = rng.uniform(-bound, bound);
    p.biases[k].assign(fan_out, 0.0);
  }
  return p;
}

MlpParams MlpParams::zeros(const MlpShape& shape) {
  check_shape(shape);
  MlpParams p;
  p.shape = shape;
  p.weights.resize(shape.num_layers());
  p.biases.resize(shape.num_layers());
  for (int k = 0; k < shape.num_layers(); ++k) {
    p.weights[k].assign(static_cast<std::size_t>(shape.layer_out(k)) * shape.layer_in(k), 0.0);
    p.biases[k].assign(shape.layer_out(k), 0.0);
  }
  return p;
}

std::size_t MlpParams::param_count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += w.size();
  for (const auto& b : biases) n += b.size();
  return n;
}

void MlpParams::set_zero() {
  for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

bool MlpParams::all_finite() const {
  for (const auto& w : weights)
    for (double x : w)
      if (!std::isfinite(x)) return false;
  for (const auto& b : biases)
    for (double x : b)
      if (!std::isfinite(x)) return false;
  return true;
}

namespace {

// y = W x + b
void affine(const std::vector<double>& w, const std::vector<double>& b,
            std::span<const double> x, std::vector<double>& y) {
  const std::size_t rows = b.size();
  const std::size_t cols = x.size();
  y.resize(rows);
  const double* wp = w.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b[r];
    const double* row = wp + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

}  // namespace

std::vector<double> mlp_forward(const MlpParams& params, std::span<const double> x) {
  if (static_cast<int>(x.size()) != params.shape.in_dim) {
    throw std::invalid_argument("mlp_forward: input size does not match in_dim");
  }
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (int k = 0; k < params.shape.num_layers(); ++k) {
    affine(params.weights[k], params.biases[k], cur, next);
    if (k < params.shape.depth) {
      for (double& v : next) v = v > 0.0 ? v : 0.0;
    }
    cur.swap(next);
  }
  return cur;
}

void mlp_forward_cached(const MlpParams& params, std::span<const double> x,
                        ForwardCache& cache) {
  if (static_cast<int>(x.size()) != params.shape.in_dim) {
    throw std::invalid_argument("mlp_forward: input size does not match in_dim");
  }
  cache.input.assign(x.begin(), x.end());
  cache.hidden.resize(params.shape.depth);
  std::span<const double> cur = cache.input;
  for (int k = 0; k < params.shape.depth; ++k) {
    affine(params.weights[k], params.biases[k], cur, cache.hidden[k]);
    for (double& v : cache.hidden[k]) v = v > 0.0 ? v : 0.0;
    cur = cache.hidden[k];
  }
  affine(params.weights.back(), params.biases.back(), cur, cache.output);
}

void mlp_backward(const MlpParams& params, const ForwardCache& cache,
                  std::span<const double> dloss_dout, MlpGrads& acc) {
  const MlpShape& s = params.shape;
  if (static_cast<int>(dloss_dout.size()) != s.out_dim) {
    throw std::invalid_argument("mlp_backward: gradient size does not match out_dim");
  }
  std::vector<double> delta(dloss_dout.begin(), dloss_dout.end());
  std::vector<double> prev_delta;
  for (int k = s.num_layers() - 1; k >= 0; --k) {
    const std::span<const double> in =
        k == 0 ? std::span<const double>(cache.input) : std::span<const double>(cache.hidden[k - 1]);
    const std::size_t rows = params.biases[k].size();
    const std::size_t cols = in.size();
    double* gw = acc.weights[k].data();
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = delta[r];
      acc.biases[k][r] += d;
      double* grow = gw + r * cols;
      for (std::size_t c = 0; c < cols; ++c) grow[c] += d * in[c];
    }
    if (k == 0) break;
    // delta for the previous layer: W^T delta, masked by ReLU activity.
    prev_delta.assign(cols, 0.0);
    const double* wp = params.weights[k].data();
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = delta[r];
      const double* row = wp + r * cols;
      for (std::size_t c = 0; c < cols; ++c) prev_delta[c] += d * row[c];
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (cache.hidden[k - 1][c] <= 0.0) prev_delta[c] = 0.0;
    }
    delta.swap(prev_delta);
  }
}

MlpGrads mlp_grad(const MlpParams& params, const LossFn& loss_fn,
                  std::span<const double> x) {
  ForwardCache cache;
  mlp_forward_cached(params, x, cache);
  LossEval ev = loss_fn(cache.output);
  if (!std::isfinite(ev.loss)) {
    throw std::runtime_error("mlp_grad: non-finite loss");
  }
  for (double g : ev.dloss_dout) {
    if (!std::isfinite(g)) throw std::runtime_error("mlp_grad: non-finite loss gradient");
  }
  MlpGrads grads = MlpParams::zeros(params.shape);
  mlp_backward(params, cache, ev.dloss_dout, grads);
  return grads;
}

OptState OptState::create(const MlpParams& params, double lr) {
  OptState st;
  st.lr = lr;
  st.m = MlpParams::zeros(params.shape);
  st.v = MlpParams::zeros(params.shape);
  return st;
}

namespace {

void adam_tensor(std::vector<double>& p, const std::vector<double>& g,
                 std::vector<double>& m, std::vector<double>& v,
                 double lr, double b1, double b2, double eps,
                 double bc1, double bc2) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

void opt_step(OptState& state, MlpParams& params, const MlpGrads& grads) {
  if (grads.shape != params.shape) {
    throw std::invalid_argument("opt_step: gradient shape mismatch");
  }
  if (!grads.all_finite()) {
    throw std::runtime_error("opt_step: non-finite gradients, update rejected");
  }
  const std::int64_t t = state.step + 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(t));
  for (std::size_t k = 0; k < params.weights.size(); ++k) {
    adam_tensor(params.weights[k], grads.weights[k], state.m.weights[k],
                state.v.weights[k], state.lr, state.beta1, state.beta2,
                state.eps, bc1, bc2);
    adam_tensor(params.biases[k], grads.biases[k], state.m.biases[k],
                state.v.biases[k], state.lr, state.beta1, state.beta2,
                state.eps, bc1, bc2);
  }
  state.step = t;
}

namespace {

constexpr char kCkptMagic[8] = {'Q', 'F', 'M', 'L', 'P', '0', '0', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void MlpParams::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path.string());
  os.write(kCkptMagic, sizeof(kCkptMagic));
  write_pod(os, static_cast<std::int32_t>(shape.in_dim));
  write_pod(os, static_cast<std::int32_t>(shape.out_dim));
  write_pod(os, static_cast<std::int32_t>(shape.width));
  write_pod(os, static_cast<std::int32_t>(shape.depth));
  for (int k = 0; k < shape.num_layers(); ++k) {
    os.write(reinterpret_cast<const char*>(weights[k].data()),
             static_cast<std::streamsize>(weights[k].size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(biases[k].data()),
             static_cast<std::streamsize>(biases[k].size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

MlpParams MlpParams::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  }
  MlpShape shape;
  shape.in_dim = read_pod<std::int32_t>(is);
  shape.out_dim = read_pod<std::int32_t>(is);
  shape.width = read_pod<std::int32_t>(is);
  shape.depth = read_pod<std::int32_t>(is);
  MlpParams p = MlpParams::zeros(shape);
  for (int k = 0; k < shape.num_layers(); ++k) {
    is.read(reinterpret_cast<char*>(p.weights[k].data()),
            static_cast<std::streamsize>(p.weights[k].size() * sizeof(double)));
    is.read(reinterpret_cast<char*>(p.biases[k].data()),
            static_cast<std::streamsize>(p.biases[k].size() * sizeof(double)));
  }
  if (!is) throw std::runtime_error("checkpoint: truncated file " + path.string());
  if (!p.all_finite()) throw std::runtime_error("checkpoint: non-finite parameters");
  return p;
}

}  // namespace qfil
