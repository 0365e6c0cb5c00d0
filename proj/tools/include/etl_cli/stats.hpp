#pragma once

#include <cstddef>
#include <vector>

namespace etl::cli {

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;  // sample standard deviation / sqrt(count); 0 for a single sample
};

MeanStderr mean_stderr(const std::vector<double>& values);

/// One-sided paired sign test of H1: a_i < b_i more often than not. Ties are dropped.
struct SignTest {
  long wins = 0;  // a_i < b_i
  long losses = 0;
  long ties = 0;
  double p_value = 1.0;  // P(Binomial(wins + losses, 1/2) >= wins)
};

SignTest sign_test(const std::vector<double>& a, const std::vector<double>& b);

/// Upper tail of Binomial(n, 1/2), exact (log-space sum).
double binomial_half_upper_tail(long n, long k);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Wilson score interval for a binomial proportion at z standard errors.
Interval wilson_interval(long successes, long trials, double z = 1.959963984540054);

/// alpha + 3 sqrt(alpha (1 - alpha) / runs).
double binomial_level_bound(double alpha, long runs);

}  // namespace etl::cli
