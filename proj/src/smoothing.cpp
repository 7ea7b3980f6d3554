#include "smoothcert/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "smoothcert/special_math.hpp"

namespace smoothcert {

std::vector<double> CertificationParams::default_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 10; ++i) grid.push_back(i / 10.0);
  return grid;
}

void CertificationParams::validate() const {
  if (n0 < 1 || n < 1) throw std::invalid_argument("certification: n0 and n must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("certification: alpha must be in (0, 1)");
  }
  if (grid.empty()) throw std::invalid_argument("certification: empty alpha' grid");
  bool has_one = false;
  for (double t : grid) {
    if (!(t > 0.0 && t <= 1.0)) {
      throw std::invalid_argument("certification: grid fractions must be in (0, 1]");
    }
    if (t == 1.0) has_one = true;
  }
  if (!has_one) throw std::invalid_argument("certification: grid must contain 1.0");
}

CountVector sample_under_noise(const ClassifierModel& f, std::span<const double> x,
                               std::int64_t m, double sigma, RngStream& rng) {
  if (m < 1) throw std::invalid_argument("sample_under_noise: m must be >= 1");
  if (static_cast<int>(x.size()) != f.input_dim()) {
    throw std::invalid_argument("sample_under_noise: input dimension mismatch");
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("sample_under_noise: sigma must be positive");
  CountVector out;
  out.counts.assign(f.num_classes(), 0);
  std::vector<double> perturbed(x.size());
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) perturbed[j] = x[j] + sigma * rng.next_gaussian();
    ++out.counts[f.predict(perturbed)];
  }
  return out;
}

double certified_radius(double p_lower, double p_upper, double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("certified_radius: sigma must be positive");
  return 0.5 * sigma * (std_normal_quantile(p_lower) - std_normal_quantile(p_upper));
}

CertificationOutcome certify_baseline_from_counts(const CountVector& selection,
                                                  const CountVector& estimation,
                                                  const SmoothingConfig& cfg,
                                                  const CertificationParams& params) {
  const int top = selection.top_class();
  const std::int64_t n = estimation.total();
  const double p_lower = cp_lower(estimation.counts[top], n, params.alpha);
  const double p_upper = 1.0 - p_lower;

  CertificationOutcome out;
  if (p_lower > 0.5) {
    out.status = CertStatus::kCertified;
    out.label = top;
    out.radius = cfg.sigma * std_normal_quantile(p_lower);
  }
  out.grid_info.push_back({params.alpha, p_lower, p_upper, out.radius});
  return out;
}

CertificationOutcome t_certify_from_counts(const CountVector& selection,
                                           const CountVector& estimation,
                                           const SmoothingConfig& cfg,
                                           const CertificationParams& params) {
  const int top = selection.top_class();
  CertificationOutcome out;
  double best = 0.0;
  for (double t : params.grid) {
    const double alpha_prime = t * params.alpha;
    const BoundPair bp = bound_pair(estimation, top, {params.alpha, alpha_prime});
    double r = 0.0;
    if (bp.p_lower > 0.5) {
      r = certified_radius(bp.p_lower, bp.p_upper, cfg.sigma);
    }
    out.grid_info.push_back({alpha_prime, bp.p_lower, bp.p_upper, r});
    best = std::max(best, r);
  }
  if (best > 0.0) {
    out.status = CertStatus::kCertified;
    out.label = top;
    out.radius = best;
  }
  return out;
}

namespace {

// Selection and estimation use independent sub-streams of the caller's
// stream, mirroring the two sampling rounds of the certification procedure.
struct CertSamples {
  CountVector selection;
  CountVector estimation;
};

CertSamples draw_samples(const ClassifierModel& f, std::span<const double> x,
                         const SmoothingConfig& cfg, const CertificationParams& params,
                         const RngStream& rng) {
  RngStream select_rng = rng.split("select");
  RngStream estimate_rng = rng.split("estimate");
  CertSamples s;
  s.selection = sample_under_noise(f, x, params.n0, cfg.sigma, select_rng);
  s.estimation = sample_under_noise(f, x, params.n, cfg.sigma, estimate_rng);
  return s;
}

}  // namespace

CertificationOutcome certify_baseline(const ClassifierModel& f, std::span<const double> x,
                                      const SmoothingConfig& cfg,
                                      const CertificationParams& params, RngStream rng) {
  params.validate();
  const CertSamples s = draw_samples(f, x, cfg, params, rng);
  return certify_baseline_from_counts(s.selection, s.estimation, cfg, params);
}

CertificationOutcome t_certify(const ClassifierModel& f, std::span<const double> x,
                               const SmoothingConfig& cfg, const CertificationParams& params,
                               RngStream rng) {
  params.validate();
  const CertSamples s = draw_samples(f, x, cfg, params, rng);
  return t_certify_from_counts(s.selection, s.estimation, cfg, params);
}

int predict_smoothed(const ClassifierModel& f, std::span<const double> x,
                     const SmoothingConfig& cfg, std::int64_t m, RngStream rng) {
  return sample_under_noise(f, x, m, cfg.sigma, rng).top_class();
}

}  // namespace smoothcert
