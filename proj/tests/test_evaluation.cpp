#include "smoothcert/evaluation.hpp"

#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "smoothcert/dataset.hpp"
#include "smoothcert/models.hpp"

using namespace smoothcert;

namespace {

CertificationOutcome certified(int label, double radius) {
  CertificationOutcome o;
  o.status = CertStatus::kCertified;
  o.label = label;
  o.radius = radius;
  return o;
}

CertificationOutcome abstained() { return CertificationOutcome{}; }

}  // namespace

TEST_CASE("certified accuracy hand example") {
  std::vector<CertificationOutcome> outcomes{certified(0, 0.6), certified(1, 0.9), abstained()};
  std::vector<int> labels{0, 2, 1};  // second certification is wrong
  const std::vector<double> radii{0.0, 0.5, 0.75};
  const auto curve = certified_accuracy(outcomes, labels, radii);
  REQUIRE(curve.accuracy.size() == 3);
  CHECK(curve.accuracy[0] == doctest::Approx(1.0 / 3.0));
  CHECK(curve.accuracy[1] == doctest::Approx(1.0 / 3.0));
  CHECK(curve.accuracy[2] == doctest::Approx(0.0));
}

TEST_CASE("all abstentions yield the zero curve") {
  std::vector<CertificationOutcome> outcomes{abstained(), abstained()};
  std::vector<int> labels{0, 1};
  const auto curve = certified_accuracy(outcomes, labels, default_radius_grid());
  for (double a : curve.accuracy) CHECK(a == 0.0);
}

TEST_CASE("certified accuracy is non-increasing in the radius") {
  RngStream rng(41);
  std::vector<CertificationOutcome> outcomes;
  std::vector<int> labels;
  for (int i = 0; i < 200; ++i) {
    const int label = static_cast<int>(rng.next_below(3));
    if (rng.next_unit() < 0.3) {
      outcomes.push_back(abstained());
    } else {
      const int predicted = rng.next_unit() < 0.8 ? label : (label + 1) % 3;
      outcomes.push_back(certified(predicted, 2.0 * rng.next_unit()));
    }
    labels.push_back(label);
  }
  const auto curve = certified_accuracy(outcomes, labels, default_radius_grid());
  for (std::size_t i = 1; i < curve.accuracy.size(); ++i) {
    CHECK(curve.accuracy[i] <= curve.accuracy[i - 1]);
  }
}

TEST_CASE("certified accuracy validation") {
  std::vector<CertificationOutcome> outcomes{certified(0, 1.0)};
  std::vector<int> labels{0, 1};
  CHECK_THROWS_AS((void)certified_accuracy(outcomes, labels, default_radius_grid()),
                  std::invalid_argument);
  labels.pop_back();
  const std::vector<double> unsorted{1.0, 0.5};
  CHECK_THROWS_AS((void)certified_accuracy(outcomes, labels, unsorted), std::invalid_argument);
}

TEST_CASE("compare_certifiers on a constant classifier gives identical curves") {
  TableModel model({{0.0, 0.0}}, {1}, 3);
  Dataset data;
  data.input_dim = 2;
  for (int i = 0; i < 10; ++i) {
    data.inputs.push_back({0.1 * i, -0.2 * i});
    data.labels.push_back(1);
  }
  CertificationParams params;
  params.n0 = 20;
  params.n = 400;
  params.alpha = 0.01;
  const auto cmp = compare_certifiers(model, data, {0.5}, params, RngStream(3),
                                      default_radius_grid());
  REQUIRE(cmp.baseline_curve.accuracy.size() == cmp.tcert_curve.accuracy.size());
  for (std::size_t i = 0; i < cmp.baseline_curve.accuracy.size(); ++i) {
    CHECK(cmp.baseline_curve.accuracy[i] == cmp.tcert_curve.accuracy[i]);
  }
  // all-zero runner-up counts: the t = 1.0 point is optimal, so radii match
  for (const auto& [idx, delta] : cmp.radius_delta) CHECK(delta == 0.0);
}

TEST_CASE("compare_certifiers dominance and reproducibility on the linear oracle") {
  LinearModel model({1.0, 1.0}, 0.0);
  Dataset data;
  data.input_dim = 2;
  RngStream points(5);
  for (int i = 0; i < 15; ++i) {
    data.inputs.push_back({2.0 * points.next_gaussian(), 2.0 * points.next_gaussian()});
    data.labels.push_back(model.predict(data.inputs.back()));
  }
  CertificationParams params;
  params.n0 = 50;
  params.n = 2000;
  params.alpha = 0.001;
  const auto cmp =
      compare_certifiers(model, data, {1.0}, params, RngStream(7), default_radius_grid());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(cmp.baseline[i].certified() == cmp.tcert[i].certified());
    if (cmp.baseline[i].certified()) {
      CHECK(cmp.tcert[i].radius >= cmp.baseline[i].radius);
    }
  }
  const auto cmp2 =
      compare_certifiers(model, data, {1.0}, params, RngStream(7), default_radius_grid());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(cmp.baseline[i].radius == cmp2.baseline[i].radius);
    CHECK(cmp.tcert[i].radius == cmp2.tcert[i].radius);
  }
}

TEST_CASE("results CSV round-trip") {
  std::vector<SampleResult> rows;
  SampleResult a;
  a.idx = 0;
  a.true_label = 1;
  a.predicted = 1;
  a.radius = 0.523456789012345;
  a.correct = true;
  a.abstain = false;
  a.method = "certify";
  rows.push_back(a);
  SampleResult b;
  b.idx = 1;
  b.true_label = 0;
  b.method = "tcertify";
  rows.push_back(b);

  const std::string path =
      (std::filesystem::temp_directory_path() / "smoothcert_results_roundtrip.csv").string();
  write_results_csv(path, rows);
  const auto loaded = read_results_csv(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].radius == rows[0].radius);
  CHECK(loaded[0].method == "certify");
  CHECK(loaded[0].correct);
  CHECK(loaded[1].abstain);
  CHECK(loaded[1].predicted == -1);
  std::remove(path.c_str());
}
