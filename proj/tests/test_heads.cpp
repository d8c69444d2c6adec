#include <stdexcept>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "qfil/gauss.hpp"
#include "qfil/heads.hpp"
#include "qfil/rng.hpp"

using namespace qfil;

namespace {

// Simpson integration of exp(logprob) over [lo, hi].
double density_integral(const TruncNormalHead& h, int panels = 20000) {
  const double w = (h.hi - h.lo) / panels;
  double acc = std::exp(h.logprob(h.lo)) + std::exp(h.logprob(h.hi));
  for (int i = 1; i < panels; ++i) {
    acc += std::exp(h.logprob(h.lo + i * w)) * (i % 2 ? 4.0 : 2.0);
  }
  return acc * w / 3.0;
}

}  // namespace

TEST_CASE("truncated normal density integrates to one") {
  for (auto [mean, logstd] : std::vector<std::pair<double, double>>{
           {0.5, -1.5}, {0.5, 0.0}, {0.0, -2.0}, {1.7, -1.0}, {-4.0, -0.5}, {12.0, 0.0}}) {
    TruncNormalHead h{mean, logstd, 0.0, 1.0};
    CHECK(std::abs(density_integral(h) - 1.0) < 1e-6);
  }
}

TEST_CASE("sharp head prefers its mean by many nats") {
  TruncNormalHead h{0.5, -4.5, 0.0, 1.0};
  CHECK(h.logprob(0.5) - h.logprob(0.0) > 10.0);
}

TEST_CASE("wide-std limit of truncation is uniform") {
  // The clamp caps std at 1, so the 10x width-to-std ratio is realized by
  // shrinking the interval instead of inflating the std.
  TruncNormalHead wide{0.5, 0.0, 0.45, 0.55};
  for (double a = 0.45; a <= 0.55; a += 0.01) {
    // log density of U[0.45, 0.55] is log(10); agreement within 1e-2 nats
    CHECK(std::abs(wide.logprob(a) - std::log(10.0)) < 1e-2);
  }
}

TEST_CASE("log std clamp bounds the effective std") {
  TruncNormalHead h{0.5, 3.0, 0.0, 1.0};
  CHECK(h.clamped_log_std() == 0.0);
  h.log_std = -9.0;
  CHECK(h.clamped_log_std() == -5.0);
}

TEST_CASE("out of bounds action is rejected") {
  TruncNormalHead h{0.5, -1.0, 0.0, 1.0};
  CHECK_THROWS_AS(h.logprob(1.5), std::invalid_argument);
  CHECK_NOTHROW(h.logprob(0.0));
  CHECK_NOTHROW(h.logprob(1.0));
}

TEST_CASE("samples stay inside the bounds") {
  RngStream rng(1, "tn");
  TruncNormalHead h{0.9, -0.3, 0.0, 1.0};
  for (int i = 0; i < 100000; ++i) {
    const double a = h.sample(rng);
    REQUIRE(a >= 0.0);
    REQUIRE(a <= 1.0);
  }
}

TEST_CASE("empirical mean matches the analytic truncated mean") {
  RngStream rng(2, "tn");
  TruncNormalHead h{0.5, -1.2, 0.0, 1.0};
  const double sd = h.std_dev();
  const double alpha = (h.lo - h.mean) / sd;
  const double beta = (h.hi - h.mean) / sd;
  const double z = normal_cdf(beta) - normal_cdf(alpha);
  const double analytic = h.mean + sd * (normal_pdf(alpha) - normal_pdf(beta)) / z;
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = h.sample(rng);
    sum += a;
    sumsq += a * a;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sumsq / n - mean * mean) / n);
  CHECK(std::abs(mean - analytic) < 3.0 * se);
}

TEST_CASE("sampling histogram matches exp(logprob) binwise") {
  RngStream rng(3, "tn");
  TruncNormalHead h{0.3, -1.0, 0.0, 1.0};
  const int n = 100000, bins = 20;
  std::vector<int> counts(bins, 0);
  for (int i = 0; i < n; ++i) {
    const int b = std::min(bins - 1, static_cast<int>(h.sample(rng) * bins));
    ++counts[b];
  }
  const double sd = h.std_dev();
  const double z = normal_cdf((h.hi - h.mean) / sd) - normal_cdf((h.lo - h.mean) / sd);
  for (int b = 0; b < bins; ++b) {
    const double lo = static_cast<double>(b) / bins;
    const double hi = static_cast<double>(b + 1) / bins;
    const double p =
        (normal_cdf((hi - h.mean) / sd) - normal_cdf((lo - h.mean) / sd)) / z;
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(static_cast<double>(counts[b]) / n - p) < 4.0 * se + 1e-9);
  }
}

TEST_CASE("extreme off-interval means sample at the near bound") {
  RngStream rng(4, "tn");
  TruncNormalHead far{50.0, -5.0, 0.0, 1.0};
  for (int i = 0; i < 100; ++i) {
    CHECK(far.sample(rng) == doctest::Approx(1.0).epsilon(1e-9));
  }
  TruncNormalHead low{-50.0, -5.0, 0.0, 1.0};
  for (int i = 0; i < 100; ++i) {
    CHECK(low.sample(rng) == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("mode clamps the mean to the interval") {
  CHECK(TruncNormalHead{0.3, -1.0, 0.0, 1.0}.mode() == 0.3);
  CHECK(TruncNormalHead{1.7, -1.0, 0.0, 1.0}.mode() == 1.0);
  CHECK(TruncNormalHead{-0.2, -1.0, 0.0, 1.0}.mode() == 0.0);
}

TEST_CASE("logprob gradient matches finite differences") {
  for (auto [mean, logstd, a] : std::vector<std::array<double, 3>>{
           {0.4, -1.3, 0.6}, {0.9, -0.2, 0.1}, {-0.5, -2.0, 0.05}, {1.4, -3.0, 0.99}}) {
    TruncNormalHead h{mean, logstd, 0.0, 1.0};
    const auto g = h.logprob_grad(a);
    const double hstep = 1e-6;
    TruncNormalHead hp = h, hm = h;
    hp.mean += hstep;
    hm.mean -= hstep;
    const double fd_mean = (hp.logprob(a) - hm.logprob(a)) / (2 * hstep);
    CHECK(g[0] == doctest::Approx(fd_mean).epsilon(1e-4));
    hp = h;
    hm = h;
    hp.log_std += hstep;
    hm.log_std -= hstep;
    const double fd_ls = (hp.logprob(a) - hm.logprob(a)) / (2 * hstep);
    CHECK(g[1] == doctest::Approx(fd_ls).epsilon(1e-4));
  }
}

TEST_CASE("clamped log std receives zero gradient") {
  TruncNormalHead h{0.5, 0.7, 0.0, 1.0};  // raw above the clamp
  CHECK(h.logprob_grad(0.5)[1] == 0.0);
  h.log_std = -6.0;
  CHECK(h.logprob_grad(0.5)[1] == 0.0);
}

TEST_CASE("categorical with equal logits is uniform") {
  CategoricalHead h{{0.0, 0.0}};
  CHECK(h.logprob(0) == doctest::Approx(std::log(0.5)));
  CHECK(h.logprob(1) == doctest::Approx(std::log(0.5)));
}

TEST_CASE("degenerate categorical always samples the mass point") {
  RngStream rng(5, "cat");
  CategoricalHead h{{0.0, -1e9}};
  for (int i = 0; i < 1000; ++i) CHECK(h.sample(rng) == 0);
}

TEST_CASE("categorical mode breaks ties toward the lowest index") {
  CategoricalHead h{{1.0, 3.0, 3.0}};
  CHECK(h.mode() == 1);
}

TEST_CASE("categorical probabilities sum to one") {
  CategoricalHead h{{10.0, -3.0, 2.0, 0.0}};
  const auto p = h.probs();
  double sum = 0.0;
  for (double v : p) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(std::abs(sum - 1.0) < 1e-12);
}

TEST_CASE("categorical logprob gradient is onehot minus softmax") {
  CategoricalHead h{{0.5, -0.5, 1.0}};
  const auto p = h.probs();
  const auto g = h.logprob_grad(2);
  CHECK(g[0] == doctest::Approx(-p[0]));
  CHECK(g[1] == doctest::Approx(-p[1]));
  CHECK(g[2] == doctest::Approx(1.0 - p[2]));
  CHECK_THROWS_AS(h.logprob(3), std::invalid_argument);
}

TEST_CASE("categorical sampling frequencies match probabilities") {
  RngStream rng(6, "cat");
  CategoricalHead h{{0.0, std::log(3.0)}};  // probs 0.25 / 0.75
  int ones = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) ones += h.sample(rng);
  const double f = static_cast<double>(ones) / n;
  CHECK(std::abs(f - 0.75) < 4.0 * std::sqrt(0.75 * 0.25 / n));
}
