// Chi-square distribution through the regularized incomplete gamma function.

#include <cmath>
#include <limits>

#include "etl/linalg.hpp"

namespace etl {

namespace {

constexpr int kMaxTerms = 1000;
constexpr double kEps = 1e-15;

double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int k = 1; k < kMaxTerms; ++k) {
    term *= x / (a + k);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper tail Q(a, x) by the modified Lentz continued fraction.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double chi2_pdf(double q, int dof) {
  if (q <= 0.0) return 0.0;
  const double k = 0.5 * dof;
  return std::exp((k - 1.0) * std::log(q) - 0.5 * q - k * std::log(2.0) - std::lgamma(k));
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw Error("regularized_gamma_p: a must be positive");
  if (x <= 0.0) return 0.0;
  if (!std::isfinite(x)) return 1.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_fraction(a, x);
}

double chi2_cdf(double q, int dof) {
  if (dof < 1) throw Error("chi2_cdf: dof must be >= 1");
  return regularized_gamma_p(0.5 * dof, 0.5 * q);
}

double chi2_quantile(double p, int dof) {
  if (!(p > 0.0 && p < 1.0)) throw Error("chi2_quantile: p must lie in (0, 1)");
  if (dof < 1) throw Error("chi2_quantile: dof must be >= 1");

  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(dof));
  while (chi2_cdf(hi, dof) < p) {
    lo = hi;
    hi *= 2.0;
  }
  // Bisection to a tight bracket, then Newton steps kept inside it.
  for (int i = 0; i < 200 && hi - lo > 1e-10 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chi2_cdf(mid, dof) < p)
      lo = mid;
    else
      hi = mid;
  }
  double q = 0.5 * (lo + hi);
  for (int i = 0; i < 3; ++i) {
    const double f = chi2_cdf(q, dof) - p;
    const double fp = chi2_pdf(q, dof);
    if (!(fp > 0.0)) break;
    const double next = q - f / fp;
    if (!(next > lo && next < hi)) break;
    q = next;
  }
  return q;
}

}  // namespace etl
