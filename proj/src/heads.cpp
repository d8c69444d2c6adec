#include "qfil/heads.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qfil/gauss.hpp"

namespace qfil {

double TruncNormalHead::clamped_log_std() const {
  return std::clamp(log_std, kLogStdLo, kLogStdHi);
}

double TruncNormalHead::std_dev() const { return std::exp(clamped_log_std()); }

double TruncNormalHead::logprob(double a) const {
  if (!(a >= lo && a <= hi)) {
    throw std::invalid_argument("TruncNormalHead::logprob: action outside bounds");
  }
  const double ls = clamped_log_std();
  const double sd = std::exp(ls);
  const double z = (a - mean) / sd;
  const double alpha = (lo - mean) / sd;
  const double beta = (hi - mean) / sd;
  return log_normal_pdf(z) - ls - log_normal_cdf_diff(alpha, beta);
}

double TruncNormalHead::sample(RngStream& rng) const {
  const double sd = std_dev();
  const double alpha = (lo - mean) / sd;
  const double beta = (hi - mean) / sd;
  const double u = rng.uniform_open();
  double z;
  if (alpha > 8.0) {
    // Both bounds in the right tail; interpolate survival values.
    const double qa = std::exp(log_normal_sf(alpha));
    const double qb = std::exp(log_normal_sf(beta));
    const double q = qb + u * (qa - qb);
    z = q > 0.0 ? -inverse_normal_cdf(q) : alpha;
  } else if (beta < -8.0) {
    const double qa = std::exp(log_normal_sf(-beta));
    const double qb = std::exp(log_normal_sf(-alpha));
    const double q = qb + u * (qa - qb);
    z = q > 0.0 ? inverse_normal_cdf(q) : beta;
  } else {
    const double pa = normal_cdf(alpha);
    const double pb = normal_cdf(beta);
    double p = pa + u * (pb - pa);
    p = std::clamp(p, 0x1.0p-1074, 1.0 - 0x1.0p-53);
    z = inverse_normal_cdf(p);
  }
  return std::clamp(mean + sd * z, lo, hi);
}

double TruncNormalHead::mode() const { return std::clamp(mean, lo, hi); }

std::array<double, 2> TruncNormalHead::logprob_grad(double a) const {
  const double ls = clamped_log_std();
  const double sd = std::exp(ls);
  const double z = (a - mean) / sd;
  const double alpha = (lo - mean) / sd;
  const double beta = (hi - mean) / sd;
  const double log_z_mass = log_normal_cdf_diff(alpha, beta);
  // Density ratios phi(.)/Z evaluated in log space for tail stability.
  const double ra = std::exp(log_normal_pdf(alpha) - log_z_mass);
  const double rb = std::exp(log_normal_pdf(beta) - log_z_mass);
  const double dmean = z / sd + (rb - ra) / sd;
  const double dsigma = (z * z - 1.0) / sd + (beta * rb - alpha * ra) / sd;
  const bool clamp_active = log_std < kLogStdLo || log_std > kLogStdHi;
  const double dlogstd = clamp_active ? 0.0 : dsigma * sd;
  return {dmean, dlogstd};
}

std::vector<double> CategoricalHead::probs() const {
  if (logits.empty()) throw std::invalid_argument("CategoricalHead: empty logits");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double CategoricalHead::logprob(int a) const {
  if (a < 0 || a >= static_cast<int>(logits.size())) {
    throw std::invalid_argument("CategoricalHead::logprob: action index out of range");
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - mx);
  return logits[a] - mx - std::log(sum);
}

int CategoricalHead::sample(RngStream& rng) const {
  const std::vector<double> p = probs();
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    cum += p[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(p.size()) - 1;
}

int CategoricalHead::mode() const {
  if (logits.empty()) throw std::invalid_argument("CategoricalHead: empty logits");
  int best = 0;
  for (int i = 1; i < static_cast<int>(logits.size()); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return best;
}

std::vector<double> CategoricalHead::logprob_grad(int a) const {
  if (a < 0 || a >= static_cast<int>(logits.size())) {
    throw std::invalid_argument("CategoricalHead::logprob_grad: action index out of range");
  }
  std::vector<double> g = probs();
  for (double& v : g) v = -v;
  g[a] += 1.0;
  return g;
}

}  // namespace qfil
