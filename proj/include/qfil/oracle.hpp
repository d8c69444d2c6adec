#ifndef QFIL_ORACLE_HPP_
#define QFIL_ORACLE_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "qfil/dataset.hpp"
#include "qfil/quantile.hpp"
#include "qfil/rng.hpp"

namespace qfil {

// Finite real-valued distribution with sorted distinct support. When built
// from integer masses the CDF is evaluated from exact integer cumulative
// sums (one correctly rounded division per evaluation), which is what makes
// the affine-relation and quantile-equivalence checks exact.
class DiscreteDist {
 public:
  static DiscreteDist from_masses(std::vector<double> values,
                                  std::vector<std::uint64_t> masses);
  static DiscreteDist from_probs(std::vector<double> values, std::vector<double> probs);

  std::size_t size() const { return values_.size(); }
  double value(std::size_t i) const { return values_[i]; }
  double prob(std::size_t i) const;
  // P(X <= value(i)).
  double cdf(std::size_t i) const;
  bool has_masses() const { return masses_.has_value(); }
  const std::vector<std::uint64_t>& masses() const { return *masses_; }
  std::uint64_t total_mass() const { return total_mass_; }

  // Support values repeated by mass (masses construction only): the sample
  // list whose empirical CDF equals this distribution exactly.
  std::vector<double> expand_samples() const;

 private:
  DiscreteDist() = default;
  void validate() const;

  std::vector<double> values_;               // sorted, distinct
  std::vector<double> probs_;
  std::vector<double> cum_probs_;
  std::optional<std::vector<std::uint64_t>> masses_;
  std::vector<std::uint64_t> cum_masses_;
  std::uint64_t total_mass_ = 0;
};

// sup{ v : F(v) <= tau } by linear scan of the exact step CDF.
double exact_quantile(const DiscreteDist& d, double tau);

// Restriction of d to values >= exact_quantile(d, tau), renormalized.
// This is the theory's ">=" convention for the filtered policy.
DiscreteDist filtered_policy(const DiscreteDist& d, double tau);

// Max over support points v of |F_filtered(v) - max(0, (F(v)-tau)/(1-tau))|.
double cdf_affine_deviation(const DiscreteDist& d, double tau);

// Exact inverse-CDF integral between two finite distributions, computed by
// merging CDF breakpoints.
double exact_w1(const DiscreteDist& d1, const DiscreteDist& d2);

struct DiagnosticsReport {
  double tau = 0.0;
  double one_minus_tau = 0.0;
  // Monte Carlo estimate of E_s[ W1(filtered pushforward, behavior pushforward) ].
  double w1_term = 0.0;
  double keep_rate = 0.0;  // fraction of dataset rows passing the filter
  std::size_t states = 0;
};

// Measures the improvement-bound W1 term and the empirical keep rate for a
// trained (or synthetic) Q function and behavior policy over the dataset.
DiagnosticsReport prop1_diagnostics(const Dataset& ds, const QFn& q,
                                    const PolicySampleFn& behavior, double tau, int m,
                                    RngStream& rng);

}  // namespace qfil

#endif  // QFIL_ORACLE_HPP_
