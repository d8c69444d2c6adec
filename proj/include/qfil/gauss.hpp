#ifndef QFIL_GAUSS_HPP_
#define QFIL_GAUSS_HPP_

namespace qfil {

// Standard normal density, CDF and friends, with tail-stable variants.
// The log-of-CDF-difference is the workhorse behind the truncated normal:
// naive Phi(b) - Phi(a) cancels catastrophically once both bounds sit in
// the same tail, which happens routinely while a policy head is training.

double normal_pdf(double x);
double log_normal_pdf(double x);
double normal_cdf(double x);

// log P(Z > x), valid for any x (asymptotic expansion past erfc underflow).
double log_normal_sf(double x);

// log(Phi(b) - Phi(a)) for a < b.
double log_normal_cdf_diff(double a, double b);

// Inverse standard normal CDF on (0, 1). Rational approximation refined to
// near machine precision with one Halley step.
double inverse_normal_cdf(double p);

}  // namespace qfil

#endif  // QFIL_GAUSS_HPP_
