#include "smoothcert/conf_bounds.hpp"

#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "smoothcert/rng.hpp"
#include "smoothcert/special_math.hpp"

using namespace smoothcert;

TEST_CASE("cp_lower closed forms") {
  CHECK(cp_lower(0, 100, 0.001) == 0.0);
  // k = n: sup { p : p^n <= alpha } = alpha^(1/n)
  CHECK(cp_lower(100, 100, 0.001) == doctest::Approx(std::pow(0.001, 0.01)).epsilon(1e-9));
}

TEST_CASE("cp_lower sits on the defining boundary") {
  const double v = cp_lower(990, 1000, 0.001);
  CHECK(std::fabs(binom_tail_ge(990, 1000, v) - 0.001) < 1e-9);
  CHECK(binom_tail_ge(990, 1000, v) <= 0.001);
  CHECK(binom_tail_ge(990, 1000, v + 1e-9) > 0.001);
}

TEST_CASE("cp_lower domain errors") {
  CHECK_THROWS_AS((void)cp_lower(5, 4, 0.05), std::domain_error);
  CHECK_THROWS_AS((void)cp_lower(2, 4, 0.0), std::domain_error);
  CHECK_THROWS_AS((void)cp_lower(2, 4, 1.0), std::domain_error);
}

TEST_CASE("cp_lower monotonicity") {
  RngStream rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::int64_t n = 10 + static_cast<std::int64_t>(rng.next_below(2000));
    const std::int64_t k = 1 + static_cast<std::int64_t>(rng.next_below(n - 1));
    const double alpha = 0.001 + 0.2 * rng.next_unit();
    CHECK(cp_lower(k + 1, n, alpha) >= cp_lower(k, n, alpha));
    CHECK(cp_lower(k, n, alpha * 1.5) >= cp_lower(k, n, alpha));
  }
}

TEST_CASE("runnerup_upper closed form and edge cases") {
  // single zero count: inf { p : (1-p)^n <= a } = 1 - a^(1/n)
  const std::int64_t zero_count[] = {0};
  CHECK(runnerup_upper(zero_count, 100, 0.001) ==
        doctest::Approx(1.0 - std::pow(0.001, 0.01)).epsilon(1e-9));
  const std::int64_t some[] = {4, 2};
  CHECK(runnerup_upper(some, 100, 0.0) == 1.0);
  CHECK_THROWS_AS((void)runnerup_upper({}, 100, 0.01), std::domain_error);
}

TEST_CASE("runnerup_upper sits on the defining boundary") {
  const std::int64_t counts[] = {30, 10};
  const double u = runnerup_upper(counts, 100, 0.01);
  const double sum = binom_tail_le(30, 100, u) + binom_tail_le(10, 100, u);
  CHECK(std::fabs(sum - 0.01) < 1e-9);
  CHECK(sum <= 0.01);
  const double sum_below =
      binom_tail_le(30, 100, u - 1e-9) + binom_tail_le(10, 100, u - 1e-9);
  CHECK(sum_below > 0.01);
}

TEST_CASE("runnerup_upper is non-decreasing in each count") {
  RngStream rng(47);
  for (int trial = 0; trial < 60; ++trial) {
    const std::int64_t n = 200 + static_cast<std::int64_t>(rng.next_below(2000));
    std::vector<std::int64_t> counts(2 + rng.next_below(4));
    std::int64_t used = 0;
    for (auto& c : counts) {
      c = static_cast<std::int64_t>(rng.next_below(n / (2 * counts.size())));
      used += c;
    }
    REQUIRE(used < n);
    const double a = 0.0005 + 0.01 * rng.next_unit();
    const double base = runnerup_upper(counts, n, a);
    const std::size_t bump = rng.next_below(counts.size());
    counts[bump] += 1;
    CHECK(runnerup_upper(counts, n, a) >= base);
  }
}

TEST_CASE("runnerup_upper with two classes matches the Clopper-Pearson upper bound") {
  // With one non-top class the sum has a single term, so the bound solves
  // P(Bin(n,p) <= k2) = a, the classic one-sided upper bound.
  RngStream rng(53);
  for (int trial = 0; trial < 40; ++trial) {
    const std::int64_t n = 100 + static_cast<std::int64_t>(rng.next_below(900));
    const std::int64_t k2 = static_cast<std::int64_t>(rng.next_below(n / 3));
    const double a = 0.001 + 0.05 * rng.next_unit();
    const std::int64_t counts[] = {k2};
    const double u = runnerup_upper(counts, n, a);
    CHECK(binom_tail_le(k2, n, u) <= a);
    CHECK(std::fabs(binom_tail_le(k2, n, u) - a) < 1e-7);
  }
}

TEST_CASE("bound_pair applies the complement cap") {
  CountVector cv{{100, 0}};
  const BoundPair bp = bound_pair(cv, 0, {0.001, 0.001});
  CHECK(bp.p_lower == doctest::Approx(0.93325).epsilon(1e-4));
  CHECK(bp.p_upper == doctest::Approx(0.06675).epsilon(1e-3));
  CHECK(bp.p_upper == 1.0 - bp.p_lower);
}

TEST_CASE("bound_pair with a split budget") {
  CountVector cv{{50, 50}};
  const BoundPair bp = bound_pair(cv, 0, {0.001, 0.0005});
  CHECK(bp.p_lower < 0.5);  // cannot certify a 50/50 split
  CHECK(bp.p_upper > bp.p_lower);
}

TEST_CASE("bound_pair cap binds exactly when the remaining budget is zero") {
  CountVector cv{{1000, 0, 0, 0, 0}};
  const BoundPair bp = bound_pair(cv, 0, {0.01, 0.01});
  CHECK(bp.p_upper == 1.0 - bp.p_lower);
}

TEST_CASE("bound_pair validation") {
  CountVector cv{{10, 5}};
  CHECK_THROWS_AS((void)bound_pair(cv, 2, {0.01, 0.005}), std::domain_error);
  CHECK_THROWS_AS((void)bound_pair(cv, 0, {0.01, 0.02}), std::domain_error);
  CountVector single{{10}};
  CHECK_THROWS_AS((void)bound_pair(single, 0, {0.01, 0.005}), std::domain_error);
}

TEST_CASE("CountVector helpers") {
  CountVector cv{{3, 9, 9, 1}};
  CHECK(cv.total() == 22);
  CHECK(cv.num_classes() == 4);
  CHECK(cv.top_class() == 1);  // tie broken toward the lowest index
}
