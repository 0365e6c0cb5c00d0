#include "etl_cli/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace etl::cli {

MeanStderr mean_stderr(const std::vector<double>& values) {
  MeanStderr r;
  if (values.empty()) return r;
  const double n = static_cast<double>(values.size());
  for (double v : values) r.mean += v;
  r.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  }
  return r;
}

double binomial_half_upper_tail(long n, long k) {
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  // log C(n, i) - n log 2, summed with a running max for stability
  double total = 0.0;
  const double log_half_n = -static_cast<double>(n) * std::log(2.0);
  for (long i = k; i <= n; ++i) {
    const double lc = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(static_cast<double>(n - i) + 1.0);
    total += std::exp(lc + log_half_n);
  }
  return std::min(1.0, total);
}

SignTest sign_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("sign_test: samples must be paired");
  SignTest t;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i])
      ++t.wins;
    else if (a[i] > b[i])
      ++t.losses;
    else
      ++t.ties;
  }
  t.p_value = binomial_half_upper_tail(t.wins + t.losses, t.wins);
  return t;
}

Interval wilson_interval(long successes, long trials, double z) {
  if (trials <= 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double binomial_level_bound(double alpha, long runs) {
  return alpha + 3.0 * std::sqrt(alpha * (1.0 - alpha) / static_cast<double>(runs));
}

}  // namespace etl::cli
