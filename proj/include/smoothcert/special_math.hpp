#pragma once

#include <cstdint>

namespace smoothcert {

// Standard normal CDF. Result is clamped to [0, 1]; saturates for large |z|.
double std_normal_cdf(double z) noexcept;

// Standard normal quantile for p strictly inside (0, 1).
//
// Rational approximation refined by one Newton step on the cdf. Computed on
// the lower half and reflected, so quantile(1 - p) == -quantile(p) bitwise
// whenever both arguments are the exact complements of each other.
// Throws std::domain_error for p <= 0 or p >= 1.
double std_normal_quantile(double p);

// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
// Continued fraction (modified Lentz) with the symmetry switch at
// x > (a+1)/(a+b+2); max 300 iterations, tolerance 1e-14.
double regularized_incomplete_beta(double x, double a, double b);

// P(Bin(n, p) <= k) via I_{1-p}(n-k, k+1). Monotone non-increasing in p.
// Throws std::domain_error for k outside [0, n], n < 1, or p outside [0, 1].
double binom_tail_le(std::int64_t k, std::int64_t n, double p);

// P(Bin(n, p) >= k) via I_p(k, n-k+1). Monotone non-decreasing in p.
// Same domain rules as binom_tail_le.
double binom_tail_ge(std::int64_t k, std::int64_t n, double p);

}  // namespace smoothcert
