#include "smoothcert/smoothing.hpp"

#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "smoothcert/special_math.hpp"

using namespace smoothcert;

namespace {

TableModel constant_classifier(int label, int num_classes, int dim) {
  return TableModel({std::vector<double>(dim, 0.0)}, {label}, num_classes);
}

CertificationParams toy_params(std::int64_t n0, std::int64_t n, double alpha) {
  CertificationParams p;
  p.n0 = n0;
  p.n = n;
  p.alpha = alpha;
  return p;
}

}  // namespace

TEST_CASE("sample_under_noise on a constant classifier") {
  TableModel model = constant_classifier(2, 4, 3);
  RngStream rng(1);
  const CountVector counts =
      sample_under_noise(model, std::vector<double>{0.0, 0.0, 0.0}, 50, 1.0, rng);
  CHECK(counts.counts[2] == 50);
  CHECK(counts.total() == 50);
}

TEST_CASE("sample_under_noise single draw is one-hot") {
  TableModel model = constant_classifier(1, 3, 2);
  RngStream rng(2);
  const CountVector counts =
      sample_under_noise(model, std::vector<double>{1.0, 1.0}, 1, 0.5, rng);
  CHECK(counts.total() == 1);
  CHECK(counts.counts[1] == 1);
}

TEST_CASE("sample_under_noise matches the analytic linear probability") {
  // margin/(sigma*||w||) = 1 so counts[1]/m should approach Phi(1).
  LinearModel model({2.0, 0.0}, 0.0);
  const double sigma = 0.5;
  const std::vector<double> x{0.5, 0.0};  // margin 1.0 = sigma * ||w||
  RngStream rng(3);
  const std::int64_t m = 100000;
  const CountVector counts = sample_under_noise(model, x, m, sigma, rng);
  const double frac = static_cast<double>(counts.counts[1]) / m;
  CHECK(std::fabs(frac - 0.8413447461) < 0.004);  // 3.5 sigma Monte Carlo band
}

TEST_CASE("sample_under_noise validation") {
  TableModel model = constant_classifier(0, 2, 2);
  RngStream rng(4);
  CHECK_THROWS_AS((void)sample_under_noise(model, std::vector<double>{1.0}, 10, 0.5, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)sample_under_noise(model, std::vector<double>{1.0, 2.0}, 0, 0.5, rng),
                  std::invalid_argument);
}

TEST_CASE("certified_radius fixed points") {
  CHECK(certified_radius(0.3, 0.3, 1.0) == 0.0);
  CHECK(certified_radius(0.8413447, 0.1586553, 0.5) == doctest::Approx(0.5).epsilon(1e-5));
  // antisymmetric pair collapses to sigma * quantile(p_lower), bitwise
  const double pl = 0.87;
  CHECK(certified_radius(pl, 1.0 - pl, 0.73) == 0.73 * std_normal_quantile(pl));
  CHECK(certified_radius(0.2, 0.8, 1.0) < 0.0);  // crossed bounds go negative
  CHECK_THROWS_AS((void)certified_radius(0.0, 0.5, 1.0), std::domain_error);
  CHECK_THROWS_AS((void)certified_radius(0.5, 1.0, 1.0), std::domain_error);
}

TEST_CASE("baseline certifier from counts") {
  const SmoothingConfig cfg{0.5};
  SUBCASE("full agreement certifies at the cp ceiling") {
    CountVector sel{{100, 0}};
    CountVector est{{100000, 0}};
    const auto out = certify_baseline_from_counts(sel, est, cfg, toy_params(100, 100000, 0.001));
    REQUIRE(out.certified());
    CHECK(out.label == 0);
    const double pl = cp_lower(100000, 100000, 0.001);
    CHECK(pl == doctest::Approx(std::pow(0.001, 1e-5)).epsilon(1e-10));
    CHECK(out.radius == 0.5 * std_normal_quantile(pl));
  }
  SUBCASE("an even split abstains") {
    CountVector sel{{60, 40}};
    CountVector est{{50000, 50000}};
    const auto out = certify_baseline_from_counts(sel, est, cfg, toy_params(100, 100000, 0.001));
    CHECK(!out.certified());
    CHECK(out.radius == 0.0);
  }
}

TEST_CASE("constant classifier always certifies at the maximal radius") {
  TableModel model = constant_classifier(1, 3, 2);
  const SmoothingConfig cfg{0.25};
  const CertificationParams params = toy_params(20, 500, 0.01);
  const auto out =
      certify_baseline(model, std::vector<double>{0.3, 0.3}, cfg, params, RngStream(5));
  REQUIRE(out.certified());
  CHECK(out.label == 1);
  CHECK(out.radius ==
        doctest::Approx(0.25 * std_normal_quantile(std::pow(0.01, 1.0 / 500))).epsilon(1e-9));
}

TEST_CASE("t_certify with grid {1.0} is bit-identical to the baseline") {
  SmoothingConfig cfg{0.7};
  CertificationParams params = toy_params(100, 10000, 0.001);
  params.grid = {1.0};
  RngStream rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = 2 + static_cast<int>(rng.next_below(5));
    CountVector est;
    est.counts.assign(c, 0);
    std::int64_t remaining = 10000;
    for (int j = 0; j < c - 1; ++j) {
      est.counts[j] = static_cast<std::int64_t>(rng.next_below(remaining + 1));
      remaining -= est.counts[j];
    }
    est.counts[c - 1] = remaining;
    CountVector sel = est;
    const auto base = certify_baseline_from_counts(sel, est, cfg, params);
    const auto tc = t_certify_from_counts(sel, est, cfg, params);
    CHECK(base.certified() == tc.certified());
    CHECK(base.radius == tc.radius);  // bitwise
    if (base.certified()) CHECK(base.label == tc.label);
  }
}

TEST_CASE("t_certify dominates the baseline on concentrated counts") {
  const SmoothingConfig cfg{1.0};
  const CertificationParams params = toy_params(100, 100000, 0.001);
  CountVector sel{{90, 6, 4}};
  CountVector est{{99000, 600, 400}};
  const auto base = certify_baseline_from_counts(sel, est, cfg, params);
  const auto tc = t_certify_from_counts(sel, est, cfg, params);
  REQUIRE(base.certified());
  REQUIRE(tc.certified());
  CHECK(tc.radius > base.radius);
  CHECK(tc.grid_info.size() == params.grid.size());
}

TEST_CASE("t_certify abstains when the top fraction is low") {
  const SmoothingConfig cfg{0.5};
  const CertificationParams params = toy_params(100, 100000, 0.001);
  CountVector sel{{50, 30, 20}};
  CountVector est{{40000, 35000, 25000}};
  const auto tc = t_certify_from_counts(sel, est, cfg, params);
  CHECK(!tc.certified());
  for (const auto& g : tc.grid_info) {
    CHECK(g.p_lower <= 0.5);
    CHECK(g.radius == 0.0);
  }
}

TEST_CASE("abstention consistency between the certifiers") {
  // The grid contains t = 1.0 and cp_lower is monotone in alpha, so the two
  // certifiers abstain on exactly the same count vectors.
  const SmoothingConfig cfg{0.5};
  const CertificationParams params = toy_params(50, 2000, 0.001);
  RngStream rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::int64_t top = 900 + static_cast<std::int64_t>(rng.next_below(1100));
    CountVector est{{top, 2000 - top}};
    CountVector sel{{80, 20}};
    const auto base = certify_baseline_from_counts(sel, est, cfg, params);
    const auto tc = t_certify_from_counts(sel, est, cfg, params);
    CHECK(base.certified() == tc.certified());
    // every grid point's lower bound is below the baseline's
    bool any_above_half = false;
    for (const auto& g : tc.grid_info) any_above_half |= g.p_lower > 0.5;
    CHECK(any_above_half == tc.certified());
  }
}

TEST_CASE("selection decides the certified label") {
  const SmoothingConfig cfg{0.5};
  const CertificationParams params = toy_params(100, 1000, 0.05);
  CountVector sel{{30, 70}};
  CountVector est{{950, 50}};  // estimation disagrees with selection
  const auto out = certify_baseline_from_counts(sel, est, cfg, params);
  // R1 = 1 from selection; its estimation count is only 50 -> abstain.
  CHECK(!out.certified());
}

TEST_CASE("predict_smoothed basics") {
  SUBCASE("constant classifier") {
    TableModel model = constant_classifier(2, 3, 2);
    CHECK(predict_smoothed(model, std::vector<double>{0.0, 0.0}, {0.5}, 100, RngStream(8)) == 2);
  }
  SUBCASE("deterministic under a fixed seed") {
    LinearModel model({1.0, 0.0}, 0.0);
    const std::vector<double> x{0.0, 0.0};  // on the hyperplane
    const int a = predict_smoothed(model, x, {1.0}, 501, RngStream(9));
    const int b = predict_smoothed(model, x, {1.0}, 501, RngStream(9));
    CHECK(a == b);
  }
  SUBCASE("strong margin never flips across 200 seeds") {
    // margin/(sigma*||w||) = 2: P(wrong vote majority) is a binomial tail
    // at Phi(2) ~ 0.977, far below 1e-3 at m = 1000.
    LinearModel model({1.0, 0.0}, 0.0);
    const std::vector<double> x{1.0, 0.0};
    const SmoothingConfig cfg{0.5};
    int failures = 0;
    for (int seed = 0; seed < 200; ++seed) {
      if (predict_smoothed(model, x, cfg, 1000, RngStream(seed)) != 1) ++failures;
    }
    CHECK(failures == 0);
  }
}

TEST_CASE("certification is deterministic and schedule-independent") {
  LinearModel model({1.5, -0.5}, 0.1);
  const std::vector<double> x{0.4, 0.1};
  const SmoothingConfig cfg{0.5};
  const CertificationParams params = toy_params(50, 2000, 0.01);

  const RngStream root(99);
  const auto a = t_certify(model, x, cfg, params, root.split(3));
  // consuming the parent stream or other splits must not disturb split(3)
  RngStream root2(99);
  (void)root2.next_u64();
  (void)root2.split(1);
  const auto b = t_certify(model, x, cfg, params, root2.split(3));
  CHECK(a.certified() == b.certified());
  CHECK(a.radius == b.radius);
  CHECK(a.label == b.label);
}

TEST_CASE("certification params validation") {
  CertificationParams params;
  params.grid = {0.5};  // missing 1.0
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  params.grid = {0.5, 1.0};
  CHECK_NOTHROW(params.validate());
  params.grid = {0.0, 1.0};
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  params.grid = {0.5, 1.0};
  params.alpha = 1.5;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
}
