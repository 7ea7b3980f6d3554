#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smoothcert/dataset.hpp"
#include "smoothcert/smoothing.hpp"

namespace smoothcert {

struct CurveMetadata {
  std::string method;
  double sigma = 0.0;
  double lambda = 0.0;
  double alpha = 0.0;
  std::int64_t n = 0;
  std::int64_t n0 = 0;
  std::string dataset_id;
  std::uint64_t seed = 0;
};

// Certified accuracy at each radius: the fraction of samples certified with
// the correct label and radius at least r. Accuracy is non-increasing in r.
struct CertifiedAccuracyCurve {
  std::vector<double> radii;
  std::vector<double> accuracy;
  CurveMetadata meta;
};

std::vector<double> default_radius_grid();  // {0, 0.25, ..., 3.0}

// Abstentions and misclassifications count as failures at every radius.
// radii must be sorted ascending; outcomes and labels must be aligned.
CertifiedAccuracyCurve certified_accuracy(std::span<const CertificationOutcome> outcomes,
                                          std::span<const int> labels,
                                          std::span<const double> radii,
                                          CurveMetadata meta = {});

struct CertifierComparison {
  std::vector<CertificationOutcome> baseline;
  std::vector<CertificationOutcome> tcert;
  // (sample index, tcert radius - baseline radius) for samples certified by
  // both. With shared counts the delta is >= 0 for every sample.
  std::vector<std::pair<std::size_t, double>> radius_delta;
  CertifiedAccuracyCurve baseline_curve;
  CertifiedAccuracyCurve tcert_curve;

  double mean_radius_delta() const;
};

// Runs both certifiers over the dataset. With shared_counts (the default)
// each input is sampled once and the identical counts feed both certifiers;
// otherwise each certifier draws independently. Per-input streams derive
// from (stream, sample index), so results do not depend on evaluation order.
CertifierComparison compare_certifiers(const ClassifierModel& f, const Dataset& data,
                                       const SmoothingConfig& cfg,
                                       const CertificationParams& params, RngStream rng,
                                       std::span<const double> radii,
                                       bool shared_counts = true);

// One row of the per-sample results file.
struct SampleResult {
  std::int64_t idx = 0;
  int true_label = -1;
  int predicted = -1;  // -1 when abstained
  double radius = 0.0;
  bool correct = false;
  bool abstain = true;
  std::string method;
  double elapsed_ms = 0.0;
};

void write_results_csv(const std::string& path, std::span<const SampleResult> rows);
std::vector<SampleResult> read_results_csv(const std::string& path);

void write_curve_csv(const std::string& path, std::span<const CertifiedAccuracyCurve> curves);

}  // namespace smoothcert
