#include <stdexcept>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "qfil/mlp.hpp"
#include "qfil/rng.hpp"

using namespace qfil;

namespace {

LossFn quadratic_loss(std::vector<double> c, std::vector<double> d) {
  return [c = std::move(c), d = std::move(d)](std::span<const double> y) {
    LossEval ev;
    ev.dloss_dout.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      ev.loss += c[i] * y[i] + 0.5 * d[i] * y[i] * y[i];
      ev.dloss_dout[i] = c[i] + d[i] * y[i];
    }
    return ev;
  };
}

double loss_at(const MlpParams& p, const LossFn& fn, std::span<const double> x) {
  const std::vector<double> y = mlp_forward(p, x);
  return fn(y).loss;
}

}  // namespace

TEST_CASE("zero parameters map any input to zero") {
  const MlpParams p = MlpParams::zeros({3, 2, 50, 2});
  const std::vector<double> y = mlp_forward(p, std::vector<double>{1.0, -2.0, 0.5});
  REQUIRE(y.size() == 2);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
}

TEST_CASE("identity linear layer reproduces the input") {
  MlpParams p = MlpParams::zeros({2, 2, 50, 0});  // no hidden layers
  p.weights[0] = {1.0, 0.0, 0.0, 1.0};
  const std::vector<double> y = mlp_forward(p, std::vector<double>{1.0, 2.0});
  CHECK(y[0] == 1.0);
  CHECK(y[1] == 2.0);
}

TEST_CASE("relu kills a negative preactivation") {
  MlpParams p = MlpParams::zeros({1, 1, 4, 1});
  for (double& w : p.weights[0]) w = 1.0;
  for (double& w : p.weights[1]) w = 1.0;
  const std::vector<double> y = mlp_forward(p, std::vector<double>{-1.0});
  CHECK(y[0] == 0.0);
}

TEST_CASE("input dimension mismatch is rejected") {
  const MlpParams p = MlpParams::zeros({2, 1, 8, 1});
  CHECK_THROWS_AS(mlp_forward(p, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("gradient of squared output of a scalar linear layer") {
  MlpParams p = MlpParams::zeros({1, 1, 1, 0});
  p.weights[0] = {2.0};
  const LossFn sq = [](std::span<const double> y) {
    return LossEval{y[0] * y[0], {2.0 * y[0]}};
  };
  const MlpGrads g = mlp_grad(p, sq, std::vector<double>{3.0});
  CHECK(g.weights[0][0] == doctest::Approx(36.0));  // 2*y*x = 2*6*3
  CHECK(g.biases[0][0] == doctest::Approx(12.0));   // 2*y
}

TEST_CASE("constant loss has zero gradient") {
  RngStream rng(1, "init");
  const MlpParams p = MlpParams::init({2, 3, 16, 2}, rng);
  const LossFn constant = [](std::span<const double> y) {
    return LossEval{5.0, std::vector<double>(y.size(), 0.0)};
  };
  const MlpGrads g = mlp_grad(p, constant, std::vector<double>{0.3, -0.7});
  for (const auto& w : g.weights)
    for (double v : w) CHECK(v == 0.0);
}

TEST_CASE("reverse mode matches central finite differences") {
  RngStream rng(2024, "fd");
  int checked = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const MlpShape shape{2, 2, 8, 2};
    MlpParams p = MlpParams::init(shape, rng);
    std::vector<double> x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    std::vector<double> c = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    std::vector<double> d = {rng.uniform(0.1, 1), rng.uniform(0.1, 1)};
    const LossFn fn = quadratic_loss(c, d);
    const MlpGrads g = mlp_grad(p, fn, x);
    const double h = 1e-5;
    for (std::size_t layer = 0; layer < p.weights.size(); ++layer) {
      for (std::size_t i = 0; i < p.weights[layer].size(); i += 7) {
        const double saved = p.weights[layer][i];
        p.weights[layer][i] = saved + h;
        const double up = loss_at(p, fn, x);
        p.weights[layer][i] = saved - h;
        const double down = loss_at(p, fn, x);
        p.weights[layer][i] = saved;
        const double fd = (up - down) / (2 * h);
        const double an = g.weights[layer][i];
        if (std::abs(an) > 1e-6) {
          CHECK(std::abs(fd - an) / std::abs(an) < 1e-4);
          ++checked;
        }
      }
    }
  }
  CHECK(checked > 50);
}

TEST_CASE("adam with zero gradients is a fixed point") {
  RngStream rng(3, "init");
  MlpParams p = MlpParams::init({1, 1, 8, 1}, rng);
  const MlpParams before = p;
  OptState st = OptState::create(p);
  opt_step(st, p, MlpParams::zeros(p.shape));
  CHECK(st.step == 1);
  for (std::size_t k = 0; k < p.weights.size(); ++k) {
    CHECK(p.weights[k] == before.weights[k]);
    CHECK(p.biases[k] == before.biases[k]);
  }
}

TEST_CASE("first adam step moves by lr times the gradient sign") {
  MlpParams p = MlpParams::zeros({1, 1, 1, 0});
  p.weights[0] = {1.0};
  OptState st = OptState::create(p, 1e-3);
  MlpGrads g = MlpParams::zeros(p.shape);
  g.weights[0][0] = 2.5;
  opt_step(st, p, g);
  CHECK(p.weights[0][0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-6));
}

TEST_CASE("second identical-gradient step is no larger than the first") {
  MlpParams p = MlpParams::zeros({1, 1, 1, 0});
  OptState st = OptState::create(p, 1e-3);
  MlpGrads g = MlpParams::zeros(p.shape);
  g.weights[0][0] = 0.7;
  opt_step(st, p, g);
  const double step1 = std::abs(p.weights[0][0]);
  const double before = p.weights[0][0];
  opt_step(st, p, g);
  const double step2 = std::abs(p.weights[0][0] - before);
  CHECK(step2 <= step1 + 1e-12);
  CHECK(st.step == 2);
}

TEST_CASE("non-finite gradients are rejected without touching state") {
  MlpParams p = MlpParams::zeros({1, 1, 1, 0});
  p.weights[0] = {1.0};
  OptState st = OptState::create(p);
  MlpGrads g = MlpParams::zeros(p.shape);
  g.weights[0][0] = std::nan("");
  CHECK_THROWS_AS(opt_step(st, p, g), std::runtime_error);
  CHECK(p.weights[0][0] == 1.0);
  CHECK(st.step == 0);
}

TEST_CASE("identical seeds give bit-identical initialization") {
  RngStream a(77, "init");
  RngStream b(77, "init");
  const MlpParams pa = MlpParams::init({3, 2, 50, 2}, a);
  const MlpParams pb = MlpParams::init({3, 2, 50, 2}, b);
  for (std::size_t k = 0; k < pa.weights.size(); ++k) CHECK(pa.weights[k] == pb.weights[k]);
}

TEST_CASE("checkpoints round-trip bit exactly") {
  RngStream rng(5, "init");
  const MlpParams p = MlpParams::init({4, 3, 20, 2}, rng);
  const std::filesystem::path path =
      std::filesystem::temp_directory_path() / "qfil_ckpt_test.bin";
  p.save(path);
  const MlpParams q = MlpParams::load(path);
  REQUIRE(q.shape == p.shape);
  for (std::size_t k = 0; k < p.weights.size(); ++k) {
    CHECK(q.weights[k] == p.weights[k]);
    CHECK(q.biases[k] == p.biases[k]);
  }
  std::filesystem::remove(path);
}
