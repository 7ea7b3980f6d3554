#include "smoothcert/conf_bounds.hpp"

#include <algorithm>
#include <stdexcept>

#include "smoothcert/special_math.hpp"

namespace smoothcert {
namespace {

constexpr int kMaxBisectIter = 200;
constexpr double kBisectTol = 1e-12;

}  // namespace

std::int64_t CountVector::total() const {
  std::int64_t n = 0;
  for (std::int64_t c : counts) n += c;
  return n;
}

int CountVector::top_class() const {
  int best = 0;
  for (int c = 1; c < num_classes(); ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  return best;
}

double cp_lower(std::int64_t k, std::int64_t n, double alpha) {
  if (n < 1 || k < 0 || k > n) throw std::domain_error("cp_lower: k outside [0, n]");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("cp_lower: alpha outside (0, 1)");
  if (k == 0) return 0.0;
  // binom_tail_ge is continuous and non-decreasing in p; tail(0) = 0 <= alpha
  // and tail(1) = 1 > alpha. Keep lo on the feasible side.
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < kMaxBisectIter && hi - lo > kBisectTol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (binom_tail_ge(k, n, mid) <= alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double runnerup_upper(std::span<const std::int64_t> counts_excl_top, std::int64_t n,
                      double alpha_rem) {
  if (counts_excl_top.empty()) throw std::domain_error("runnerup_upper: empty count list");
  if (n < 1) throw std::domain_error("runnerup_upper: n must be >= 1");
  if (alpha_rem < 0.0) throw std::domain_error("runnerup_upper: negative alpha");
  for (std::int64_t c : counts_excl_top) {
    if (c < 0 || c > n) throw std::domain_error("runnerup_upper: count outside [0, n]");
  }
  if (alpha_rem <= 0.0) return 1.0;

  const auto tail_sum = [&](double p) {
    double s = 0.0;
    for (std::int64_t c : counts_excl_top) s += binom_tail_le(c, n, p);
    return s;
  };
  // tail_sum is non-increasing in p. The set {p : tail_sum(p) <= alpha_rem}
  // is an interval [p*, 1]; bisection keeps hi on its feasible side.
  if (tail_sum(1.0) > alpha_rem) return 1.0;
  if (tail_sum(0.0) <= alpha_rem) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < kMaxBisectIter && hi - lo > kBisectTol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (tail_sum(mid) <= alpha_rem) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

BoundPair bound_pair(const CountVector& counts, int top, const SignificanceSplit& split) {
  if (counts.num_classes() < 2) throw std::domain_error("bound_pair: need at least 2 classes");
  if (top < 0 || top >= counts.num_classes()) throw std::domain_error("bound_pair: bad top index");
  if (!(split.alpha > 0.0 && split.alpha < 1.0) || split.alpha_prime < 0.0 ||
      split.alpha_prime > split.alpha) {
    throw std::domain_error("bound_pair: invalid significance split");
  }
  const std::int64_t n = counts.total();
  std::vector<std::int64_t> rest;
  rest.reserve(counts.counts.size() - 1);
  for (int c = 0; c < counts.num_classes(); ++c) {
    if (c != top) rest.push_back(counts.counts[c]);
  }
  const double p_lower = cp_lower(counts.counts[top], n, split.alpha_prime);
  const double p_upper_raw = runnerup_upper(rest, n, split.alpha - split.alpha_prime);
  return BoundPair{p_lower, std::min(p_upper_raw, 1.0 - p_lower)};
}

}  // namespace smoothcert
