#include "qfil/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qfil/quantile.hpp"

namespace qfil {

namespace {

template <typename T>
void sort_support(std::vector<double>& values, std::vector<T>& weights) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> v(values.size());
  std::vector<T> w(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    v[i] = values[order[i]];
    w[i] = weights[order[i]];
  }
  values = std::move(v);
  weights = std::move(w);
}

}  // namespace

void DiscreteDist::validate() const {
  if (values_.empty()) throw std::invalid_argument("DiscreteDist: empty support");
  for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
    if (!(values_[i] < values_[i + 1])) {
      throw std::invalid_argument("DiscreteDist: support must be strictly increasing");
    }
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("DiscreteDist: non-finite support value");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < size(); ++i) sum += prob(i);
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("DiscreteDist: probabilities must sum to 1");
  }
}

DiscreteDist DiscreteDist::from_masses(std::vector<double> values,
                                       std::vector<std::uint64_t> masses) {
  if (values.size() != masses.size()) {
    throw std::invalid_argument("DiscreteDist: values/masses size mismatch");
  }
  DiscreteDist d;
  d.values_ = std::move(values);
  std::vector<std::uint64_t> m = std::move(masses);
  sort_support(d.values_, m);
  d.total_mass_ = 0;
  d.cum_masses_.resize(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] == 0) throw std::invalid_argument("DiscreteDist: zero mass atom");
    d.total_mass_ += m[i];
    d.cum_masses_[i] = d.total_mass_;
  }
  d.masses_ = std::move(m);
  d.validate();
  return d;
}

DiscreteDist DiscreteDist::from_probs(std::vector<double> values, std::vector<double> probs) {
  if (values.size() != probs.size()) {
    throw std::invalid_argument("DiscreteDist: values/probs size mismatch");
  }
  DiscreteDist d;
  d.values_ = std::move(values);
  d.probs_ = std::move(probs);
  sort_support(d.values_, d.probs_);
  d.cum_probs_.resize(d.probs_.size());
  double cum = 0.0;
  for (std::size_t i = 0; i < d.probs_.size(); ++i) {
    if (!(d.probs_[i] > 0.0)) throw std::invalid_argument("DiscreteDist: probs must be positive");
    cum += d.probs_[i];
    d.cum_probs_[i] = cum;
  }
  d.validate();
  return d;
}

double DiscreteDist::prob(std::size_t i) const {
  if (masses_) {
    return static_cast<double>((*masses_)[i]) / static_cast<double>(total_mass_);
  }
  return probs_[i];
}

double DiscreteDist::cdf(std::size_t i) const {
  if (masses_) {
    return static_cast<double>(cum_masses_[i]) / static_cast<double>(total_mass_);
  }
  return cum_probs_[i];
}

std::vector<double> DiscreteDist::expand_samples() const {
  if (!masses_) {
    throw std::logic_error("DiscreteDist::expand_samples: requires mass construction");
  }
  std::vector<double> out;
  out.reserve(total_mass_);
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::uint64_t k = 0; k < (*masses_)[i]; ++k) out.push_back(values_[i]);
  }
  return out;
}

double exact_quantile(const DiscreteDist& d, double tau) {
  if (!(tau >= 0.0) || !(tau < 1.0)) {
    throw std::invalid_argument("exact_quantile: tau must lie in [0, 1)");
  }
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.cdf(i) > tau) return d.value(i);
  }
  return d.value(d.size() - 1);
}

DiscreteDist filtered_policy(const DiscreteDist& d, double tau) {
  const double v_tau = exact_quantile(d, tau);
  std::size_t k = 0;
  while (k < d.size() && d.value(k) < v_tau) ++k;
  if (k >= d.size()) throw std::invalid_argument("filtered_policy: zero retained mass");
  if (d.has_masses()) {
    std::vector<double> values(d.size() - k);
    std::vector<std::uint64_t> masses(d.size() - k);
    for (std::size_t i = k; i < d.size(); ++i) {
      values[i - k] = d.value(i);
      masses[i - k] = d.masses()[i];
    }
    return DiscreteDist::from_masses(std::move(values), std::move(masses));
  }
  std::vector<double> values(d.size() - k);
  std::vector<double> probs(d.size() - k);
  double kept = 0.0;
  for (std::size_t i = k; i < d.size(); ++i) kept += d.prob(i);
  for (std::size_t i = k; i < d.size(); ++i) {
    values[i - k] = d.value(i);
    probs[i - k] = d.prob(i) / kept;
  }
  return DiscreteDist::from_probs(std::move(values), std::move(probs));
}

double cdf_affine_deviation(const DiscreteDist& d, double tau) {
  const DiscreteDist f = filtered_policy(d, tau);
  const double v_min = f.value(0);
  double worst = 0.0;
  std::size_t j = 0;  // index into filtered support
  for (std::size_t i = 0; i < d.size(); ++i) {
    double f_pi = 0.0;
    if (d.value(i) >= v_min) {
      while (j + 1 < f.size() && f.value(j + 1) <= d.value(i)) ++j;
      f_pi = f.cdf(j);
    }
    const double affine = std::max(0.0, (d.cdf(i) - tau) / (1.0 - tau));
    worst = std::max(worst, std::abs(f_pi - affine));
  }
  return worst;
}

namespace {

// Merge-scan of the two step quantile functions over exact integer
// breakpoints (mass path); falls back to double cumulative fractions.
double w1_masses(const DiscreteDist& a, const DiscreteDist& b) {
  using U128 = unsigned __int128;
  const U128 ta = a.total_mass();
  const U128 tb = b.total_mass();
  const U128 common = ta * tb;
  std::size_t i = 0, j = 0;
  U128 cum_a = a.masses()[0] * tb;
  U128 cum_b = b.masses()[0] * ta;
  U128 z = 0;
  double total = 0.0;
  while (true) {
    const U128 znext = std::min(cum_a, cum_b);
    total += static_cast<double>(znext - z) * std::abs(a.value(i) - b.value(j));
    z = znext;
    if (z == common) break;
    if (cum_a == znext) cum_a += a.masses()[++i] * tb;
    if (cum_b == znext) cum_b += b.masses()[++j] * ta;
  }
  return total / static_cast<double>(common);
}

double w1_probs(const DiscreteDist& a, const DiscreteDist& b) {
  std::size_t i = 0, j = 0;
  double z = 0.0, total = 0.0;
  while (i < a.size() && j < b.size()) {
    const double za = a.cdf(i);
    const double zb = b.cdf(j);
    const double znext = std::min(za, zb);
    total += (znext - z) * std::abs(a.value(i) - b.value(j));
    z = znext;
    if (za <= znext) ++i;
    if (zb <= znext) ++j;
  }
  return total;
}

}  // namespace

double exact_w1(const DiscreteDist& d1, const DiscreteDist& d2) {
  if (d1.has_masses() && d2.has_masses()) return w1_masses(d1, d2);
  return w1_probs(d1, d2);
}

DiagnosticsReport prop1_diagnostics(const Dataset& ds, const QFn& q,
                                    const PolicySampleFn& behavior, double tau, int m,
                                    RngStream& rng) {
  if (ds.empty()) throw std::invalid_argument("prop1_diagnostics: empty dataset");
  DiagnosticsReport rep;
  rep.tau = tau;
  rep.one_minus_tau = 1.0 - tau;
  rep.states = ds.size();
  double w1_sum = 0.0;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Transition& t = ds[i];
    const PushforwardSamples ps = pushforward(q, behavior, t.state, m, rng);
    const double v_tau = empirical_quantile(ps.values, tau);
    std::vector<double> filtered;
    filtered.reserve(ps.values.size());
    for (double x : ps.values) {
      if (x >= v_tau) filtered.push_back(x);  // theory's ">=" convention
    }
    w1_sum += w1_empirical(filtered, ps.values);
    if (q(t.state, t.action) > v_tau) ++kept;  // the filter itself is strict
  }
  rep.w1_term = w1_sum / static_cast<double>(ds.size());
  rep.keep_rate = static_cast<double>(kept) / static_cast<double>(ds.size());
  return rep;
}

}  // namespace qfil
