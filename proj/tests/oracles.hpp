#pragma once

#include <cstdint>

// Independent reference implementations used to fix expected values. These
// deliberately avoid the code paths under test: the normal cdf comes from a
// Taylor series for erf, the quantile from bisection on that cdf, and the
// binomial tail from direct pmf summation.
namespace oracle {

// Taylor-series erf, accurate to ~1e-13 absolute for |x| <= 4.
double erf_series(double x);

double normal_cdf(double z);

// Bisection of normal_cdf over [-10, 10], tolerance 1e-12 in z.
double normal_quantile(double p);

// P(Bin(n, p) <= k) by summing pmf terms via lgamma.
double binom_cdf(std::int64_t k, std::int64_t n, double p);

}  // namespace oracle
