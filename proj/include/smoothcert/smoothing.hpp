#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "smoothcert/conf_bounds.hpp"
#include "smoothcert/models.hpp"
#include "smoothcert/rng.hpp"

namespace smoothcert {

struct SmoothingConfig {
  double sigma = 0.25;  // noise standard deviation, input-coordinate units
};

// Monte Carlo certification parameters. The grid holds fractions t in (0, 1];
// each grid point spends alpha' = t * alpha on the top-class lower bound and
// the remainder on the runner-up upper bound. The grid must contain t = 1.0,
// at which the certifier reduces exactly to the baseline.
struct CertificationParams {
  std::int64_t n0 = 100;
  std::int64_t n = 100000;
  double alpha = 0.001;
  std::vector<double> grid = default_grid();

  static std::vector<double> default_grid();  // {0.1, 0.2, ..., 1.0}
  void validate() const;                      // throws std::invalid_argument
};

enum class CertStatus { kCertified, kAbstain };

struct GridPointInfo {
  double alpha_prime = 0.0;
  double p_lower = 0.0;
  double p_upper = 1.0;
  double radius = 0.0;
};

struct CertificationOutcome {
  CertStatus status = CertStatus::kAbstain;
  int label = -1;        // valid when certified
  double radius = 0.0;   // > 0 when certified
  std::vector<GridPointInfo> grid_info;

  bool certified() const { return status == CertStatus::kCertified; }
};

// Draws m i.i.d. perturbations from N(0, sigma^2 I), evaluates the hard
// classifier at x + delta and returns per-class counts (summing to m).
CountVector sample_under_noise(const ClassifierModel& f, std::span<const double> x,
                               std::int64_t m, double sigma, RngStream& rng);

// (sigma/2) * (quantile(p_lower) - quantile(p_upper)). May be negative when
// the bounds cross; callers treat <= 0 as non-certifying. Both probabilities
// must be strictly inside (0, 1).
double certified_radius(double p_lower, double p_upper, double sigma);

// Baseline certifier: picks the top class from n0 selection samples, lower
// bounds its probability from n fresh samples at level alpha, and uses
// p_upper = 1 - p_lower. Certifies iff p_lower > 1/2.
CertificationOutcome certify_baseline(const ClassifierModel& f, std::span<const double> x,
                                      const SmoothingConfig& cfg,
                                      const CertificationParams& params, RngStream rng);
CertificationOutcome certify_baseline_from_counts(const CountVector& selection,
                                                  const CountVector& estimation,
                                                  const SmoothingConfig& cfg,
                                                  const CertificationParams& params);

// Split-budget certifier: same selection/estimation draws, but bounds the
// top and runner-up probabilities separately for every alpha' = t * alpha in
// the grid and returns the largest positive radius.
CertificationOutcome t_certify(const ClassifierModel& f, std::span<const double> x,
                               const SmoothingConfig& cfg, const CertificationParams& params,
                               RngStream rng);
CertificationOutcome t_certify_from_counts(const CountVector& selection,
                                           const CountVector& estimation,
                                           const SmoothingConfig& cfg,
                                           const CertificationParams& params);

// Argmax class of m noisy evaluations, ties to the lowest index.
int predict_smoothed(const ClassifierModel& f, std::span<const double> x,
                     const SmoothingConfig& cfg, std::int64_t m, RngStream rng);

}  // namespace smoothcert
