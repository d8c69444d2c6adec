#include "qfil/gauss.hpp"

#include <cmath>
#include <stdexcept>

namespace qfil {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kLogSqrt2Pi = 0.9189385332046727;  // log(sqrt(2*pi))
constexpr double kSqrt2Pi = 2.5066282746310002;
}  // namespace

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

double log_normal_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double log_normal_sf(double x) {
  if (x < 36.0) {
    return std::log(0.5 * std::erfc(x / kSqrt2));
  }
  // erfc underflows; use the asymptotic expansion of the Mills ratio.
  const double x2 = x * x;
  return log_normal_pdf(x) - std::log(x) +
         std::log1p(-1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2));
}

double log_normal_cdf_diff(double a, double b) {
  if (!(a < b)) throw std::invalid_argument("log_normal_cdf_diff: requires a < b");
  if (a + b > 0.0) return log_normal_cdf_diff(-b, -a);  // reflect into left half
  if (b <= 0.0) {
    // Both bounds in the left tail: Phi(b) - Phi(a) = SF(-b) - SF(-a).
    const double lsb = log_normal_sf(-b);
    const double lsa = log_normal_sf(-a);
    return lsb + std::log1p(-std::exp(lsa - lsb));
  }
  // Interval straddles zero; erf terms have opposite signs, no cancellation.
  return std::log(0.5 * (std::erf(b / kSqrt2) - std::erf(a / kSqrt2)));
}

double inverse_normal_cdf(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::invalid_argument("inverse_normal_cdf: p must lie in (0, 1)");
  }
  // Acklam's rational approximation (relative error < 1.2e-9).
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley refinement; skip in the extreme tails where exp(x^2/2)
  // overflows (the approximation is already adequate there).
  if (std::abs(x) < 37.0) {
    const double e = normal_cdf(x) - p;
    const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

}  // namespace qfil
