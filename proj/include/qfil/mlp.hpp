#ifndef QFIL_MLP_HPP_
#define QFIL_MLP_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "qfil/rng.hpp"

namespace qfil {

// Fixed MLP family: `depth` hidden layers of `width` units with ReLU,
// followed by a linear output layer. All arithmetic is double precision.
struct MlpShape {
  int in_dim = 0;
  int out_dim = 0;
  int width = 50;
  int depth = 2;

  int num_layers() const { return depth + 1; }
  int layer_in(int k) const { return k == 0 ? in_dim : width; }
  int layer_out(int k) const { return k == depth ? out_dim : width; }
  bool operator==(const MlpShape&) const = default;
};

struct MlpParams {
  MlpShape shape;
  // weights[k] is row-major (layer_out x layer_in); biases[k] has layer_out.
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  // Hidden layers: He-style uniform U(+-sqrt(6/fan_in)); output layer:
  // plain fan-in uniform U(+-1/sqrt(fan_in)), zero biases.
  static MlpParams init(const MlpShape& shape, RngStream& rng);
  static MlpParams zeros(const MlpShape& shape);

  std::size_t param_count() const;
  bool all_finite() const;
  void set_zero();

  void save(const std::filesystem::path& path) const;
  static MlpParams load(const std::filesystem::path& path);
};

// Gradients (and optimizer moments) share the parameter layout.
using MlpGrads = MlpParams;

struct ForwardCache {
  std::vector<std::vector<double>> hidden;  // post-ReLU activations per hidden layer
  std::vector<double> input;
  std::vector<double> output;
};

std::vector<double> mlp_forward(const MlpParams& params, std::span<const double> x);
void mlp_forward_cached(const MlpParams& params, std::span<const double> x,
                        ForwardCache& cache);

// Accumulates d(loss)/d(params) into `acc` given d(loss)/d(output).
void mlp_backward(const MlpParams& params, const ForwardCache& cache,
                  std::span<const double> dloss_dout, MlpGrads& acc);

// Loss interface for the generic gradient entry point: the callable returns
// the loss value and its gradient with respect to the network output.
struct LossEval {
  double loss = 0.0;
  std::vector<double> dloss_dout;
};
using LossFn = std::function<LossEval(std::span<const double> output)>;

// Exact reverse-mode gradient of loss_fn(forward(params, x)) w.r.t. params.
// Throws if the loss or gradient is non-finite.
MlpGrads mlp_grad(const MlpParams& params, const LossFn& loss_fn,
                  std::span<const double> x);

// Adam state. Step counter is strictly increasing; update uses the standard
// bias-corrected first/second moment rule.
struct OptState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  MlpGrads m;
  MlpGrads v;

  static OptState create(const MlpParams& params, double lr = 1e-3);
};

// In-place Adam update. Throws on non-finite gradients; params and state
// are untouched in that case.
void opt_step(OptState& state, MlpParams& params, const MlpGrads& grads);

}  // namespace qfil

#endif  // QFIL_MLP_HPP_
