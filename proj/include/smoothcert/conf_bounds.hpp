#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace smoothcert {

// Per-class Monte Carlo counts from noisy classifier evaluations.
struct CountVector {
  std::vector<std::int64_t> counts;

  std::int64_t total() const;
  int num_classes() const { return static_cast<int>(counts.size()); }
  // Argmax class, ties resolved to the lowest index.
  int top_class() const;
};

// Split of the significance budget alpha between the lower bound on the top
// class (alpha_prime) and the runner-up upper bound (alpha - alpha_prime).
struct SignificanceSplit {
  double alpha = 0.0;
  double alpha_prime = 0.0;  // in [0, alpha]
};

struct BoundPair {
  double p_lower = 0.0;
  double p_upper = 1.0;
};

// One-sided Clopper-Pearson lower confidence bound,
//   sup { p : P(Bin(n,p) >= k) <= alpha },
// with the k = 0 convention of returning 0. The returned value satisfies
// binom_tail_ge(k, n, result) <= alpha exactly (bisection keeps the feasible
// endpoint) and is within 1e-12 of the boundary.
double cp_lower(std::int64_t k, std::int64_t n, double alpha);

// Upper confidence bound for the runner-up probability,
//   inf { p : sum_j P(Bin(n,p) <= counts_excl_top[j]) <= alpha_rem },
// or 1 when no p in [0,1] satisfies the condition (alpha_rem = 0 or some
// excluded-class count equals n). counts_excl_top excludes the predicted
// class; n is the full sample size including the excluded class.
double runnerup_upper(std::span<const std::int64_t> counts_excl_top, std::int64_t n,
                      double alpha_rem);

// Bounds for (top-class probability, runner-up probability). The upper bound
// is always capped at 1 - p_lower: p_B <= 1 - p_A holds deterministically,
// and the cap makes the alpha_prime = alpha split reduce to the baseline
// certifier's bound pair.
BoundPair bound_pair(const CountVector& counts, int top, const SignificanceSplit& split);

}  // namespace smoothcert
