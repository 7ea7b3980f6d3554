#include "oracles.hpp"

#include <cmath>

namespace oracle {

double erf_series(double x) {
  // erf(x) = 2/sqrt(pi) * sum_n (-1)^n x^(2n+1) / (n! (2n+1))
  constexpr double two_over_sqrt_pi = 1.1283791670955125739;
  double term = x;
  double sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= -x * x / n;
    const double contrib = term / (2 * n + 1);
    sum += contrib;
    if (std::fabs(contrib) < 1e-18 * std::fabs(sum) + 1e-308) break;
  }
  return two_over_sqrt_pi * sum;
}

double normal_cdf(double z) {
  return 0.5 * (1.0 + erf_series(z / 1.4142135623730950488));
}

double normal_quantile(double p) {
  double lo = -10.0;
  double hi = 10.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (normal_cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double binom_cdf(std::int64_t k, std::int64_t n, double p) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  double sum = 0.0;
  for (std::int64_t j = 0; j <= k; ++j) {
    const double log_term = std::lgamma(static_cast<double>(n) + 1.0) -
                            std::lgamma(static_cast<double>(j) + 1.0) -
                            std::lgamma(static_cast<double>(n - j) + 1.0) +
                            j * std::log(p) + (n - j) * std::log1p(-p);
    sum += std::exp(log_term);
  }
  return sum > 1.0 ? 1.0 : sum;
}

}  // namespace oracle
