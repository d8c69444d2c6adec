#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "qfil/envs.hpp"
#include "qfil/oracle.hpp"

using namespace qfil;

namespace {

DiscreteDist uniform4() {
  return DiscreteDist::from_masses({1, 2, 3, 4}, {1, 1, 1, 1});
}

// Random tie-free instance with integer masses; optionally forces the cdf
// grid to contain `tau` by splitting the total mass at it.
DiscreteDist random_instance(RngStream& rng, int max_support, double* tau_on_grid) {
  const int n = 2 + static_cast<int>(rng.uniform_index(max_support - 1));
  std::vector<double> values;
  double v = rng.uniform(-10, 10);
  for (int i = 0; i < n; ++i) {
    values.push_back(v);
    v += 0.01 + rng.uniform(0.0, 2.0);  // strictly increasing: tie-free
  }
  std::vector<std::uint64_t> masses(n);
  for (auto& m : masses) m = 1 + rng.uniform_index(20);
  if (tau_on_grid != nullptr) {
    const int cut = 1 + static_cast<int>(rng.uniform_index(n - 1));
    std::uint64_t below = 0, total = 0;
    for (int i = 0; i < n; ++i) {
      total += masses[i];
      if (i < cut) below += masses[i];
    }
    *tau_on_grid = static_cast<double>(below) / static_cast<double>(total);
  }
  return DiscreteDist::from_masses(std::move(values), std::move(masses));
}

}  // namespace

TEST_CASE("exact quantile on the step cdf") {
  CHECK(exact_quantile(uniform4(), 0.5) == 3);
  CHECK(exact_quantile(DiscreteDist::from_masses({7}, {1}), 0.0) == 7);
  CHECK(exact_quantile(DiscreteDist::from_masses({7}, {1}), 0.97) == 7);
  const DiscreteDist skew = DiscreteDist::from_probs({0.0, 1.0}, {0.9, 0.1});
  CHECK(exact_quantile(skew, 0.5) == 0.0);
  CHECK_THROWS_AS(exact_quantile(uniform4(), 1.0), std::invalid_argument);
}

TEST_CASE("filtered policy restricts and renormalizes") {
  const DiscreteDist f = filtered_policy(uniform4(), 0.5);
  REQUIRE(f.size() == 2);
  CHECK(f.value(0) == 3);
  CHECK(f.value(1) == 4);
  CHECK(f.prob(0) == doctest::Approx(0.5));
  CHECK(f.prob(1) == doctest::Approx(0.5));
}

TEST_CASE("tau zero keeps the whole distribution") {
  const DiscreteDist d = uniform4();
  const DiscreteDist f = filtered_policy(d, 0.0);
  REQUIRE(f.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(f.value(i) == d.value(i));
    CHECK(f.prob(i) == doctest::Approx(d.prob(i)));
  }
}

TEST_CASE("half filter of two atoms is a point mass") {
  const DiscreteDist f = filtered_policy(DiscreteDist::from_masses({1, 2}, {1, 1}), 0.5);
  REQUIRE(f.size() == 1);
  CHECK(f.value(0) == 2);
  CHECK(f.prob(0) == 1.0);
}

TEST_CASE("cdf affine relation on the uniform example") {
  CHECK(cdf_affine_deviation(uniform4(), 0.5) < 1e-15);
  CHECK(cdf_affine_deviation(uniform4(), 0.0) < 1e-15);
}

TEST_CASE("cdf affine relation on random on-grid instances") {
  RngStream rng(1, "affine");
  for (int trial = 0; trial < 1000; ++trial) {
    double tau = 0.0;
    const DiscreteDist d = random_instance(rng, 20, &tau);
    if (tau >= 1.0) continue;
    CHECK(cdf_affine_deviation(d, tau) < 1e-12);
  }
}

TEST_CASE("exact w1 basics") {
  const DiscreteDist d = uniform4();
  CHECK(exact_w1(d, d) == 0.0);
  const DiscreteDist p0 = DiscreteDist::from_masses({0}, {1});
  const DiscreteDist p1 = DiscreteDist::from_masses({1}, {1});
  CHECK(exact_w1(p0, p1) == 1.0);
}

TEST_CASE("w1 between the uniform and its half filter") {
  // Quantile functions (1,2,3,4) vs (3,3,4,4) on quarters: mean gap 1.
  const DiscreteDist d = uniform4();
  const DiscreteDist f = filtered_policy(d, 0.5);
  const double w = exact_w1(d, f);
  CHECK(w == doctest::Approx(1.0).epsilon(1e-15));
  // Independent route: expand to equal-mass sample lists.
  const double we = w1_empirical(d.expand_samples(), f.expand_samples());
  CHECK(std::abs(w - we) < 1e-12);
}

TEST_CASE("exact and empirical w1 agree on equal-mass instances") {
  RngStream rng(2, "w1");
  for (int trial = 0; trial < 300; ++trial) {
    const DiscreteDist a = random_instance(rng, 10, nullptr);
    const DiscreteDist b = random_instance(rng, 10, nullptr);
    const double exact = exact_w1(a, b);
    const double emp = w1_empirical(a.expand_samples(), b.expand_samples());
    CHECK(std::abs(exact - emp) < 1e-12);
  }
}

TEST_CASE("exact quantile matches the empirical quantile on expansions") {
  RngStream rng(3, "qq");
  for (int trial = 0; trial < 1000; ++trial) {
    const DiscreteDist d = random_instance(rng, 20, nullptr);
    const std::vector<double> samples = d.expand_samples();
    // On and off the cdf grid.
    for (int k = 0; k < 3; ++k) {
      const double tau = rng.uniform(0.0, 0.999);
      CHECK(exact_quantile(d, tau) == empirical_quantile(samples, tau));
    }
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
      CHECK(exact_quantile(d, d.cdf(i)) == empirical_quantile(samples, d.cdf(i)));
    }
  }
}

TEST_CASE("discrete dist validates its invariants") {
  CHECK_THROWS_AS(DiscreteDist::from_masses({1.0, 1.0}, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(DiscreteDist::from_masses({1.0}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(DiscreteDist::from_probs({1.0, 2.0}, {0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(DiscreteDist::from_probs({}, {}), std::invalid_argument);
}

TEST_CASE("diagnostics w1 term vanishes for constant q and tau zero") {
  RngStream gen(4, "data");
  const Dataset ds = BanditEnv::generate(200, gen);
  const PolicySampleFn behavior = [](std::span<const double> s, RngStream& r) {
    return BanditEnv::behavior_action(s[0], r);
  };
  RngStream d1(5, "diag");
  const QFn constant = [](std::span<const double>, double) { return 1.0; };
  const DiagnosticsReport r1 = prop1_diagnostics(ds, constant, behavior, 0.9, 100, d1);
  CHECK(r1.w1_term == 0.0);
  CHECK(r1.keep_rate == 0.0);  // strict inequality keeps nothing

  RngStream d2(6, "diag");
  const QFn identity = [](std::span<const double>, double a) { return a; };
  const DiagnosticsReport r2 = prop1_diagnostics(ds, identity, behavior, 0.0, 100, d2);
  CHECK(r2.w1_term == 0.0);  // the >= filter keeps every sample at tau zero
}

TEST_CASE("diagnostics w1 term matches the uniform closed form at tau half") {
  RngStream gen(7, "data");
  const Dataset ds = BanditEnv::generate(400, gen);
  // Q(s, a) = percentile of a within the state's band: pushforward is U[0,1].
  const QFn q = [](std::span<const double> s, double a) { return 2.0 * a - s[0]; };
  const PolicySampleFn behavior = [](std::span<const double> s, RngStream& r) {
    return BanditEnv::behavior_action(s[0], r);
  };
  RngStream d(8, "diag");
  const DiagnosticsReport rep = prop1_diagnostics(ds, q, behavior, 0.5, 400, d);
  // W1(U[0,1], U[0.5,1]) = 1/4.
  CHECK(std::abs(rep.w1_term - 0.25) < 0.02);
  CHECK(rep.keep_rate == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("diagnostics w1 term grows with tau") {
  RngStream gen(9, "data");
  const Dataset ds = BanditEnv::generate(300, gen);
  const QFn q = [](std::span<const double> s, double a) { return 2.0 * a - s[0]; };
  const PolicySampleFn behavior = [](std::span<const double> s, RngStream& r) {
    return BanditEnv::behavior_action(s[0], r);
  };
  double last = -1.0;
  for (double tau : {0.0, 0.25, 0.5, 0.75, 0.9}) {
    RngStream d(10, "diag");
    const DiagnosticsReport rep = prop1_diagnostics(ds, q, behavior, tau, 200, d);
    CHECK(rep.w1_term >= last - 1e-3);
    CHECK(rep.w1_term >= 0.0);
    last = rep.w1_term;
  }
}
