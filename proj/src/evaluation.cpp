#include "smoothcert/evaluation.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "smoothcert/errors.hpp"
#include "smoothcert/io_util.hpp"

namespace smoothcert {

std::vector<double> default_radius_grid() {
  std::vector<double> radii;
  for (int i = 0; i <= 12; ++i) radii.push_back(0.25 * i);
  return radii;
}

CertifiedAccuracyCurve certified_accuracy(std::span<const CertificationOutcome> outcomes,
                                          std::span<const int> labels,
                                          std::span<const double> radii, CurveMetadata meta) {
  if (outcomes.size() != labels.size()) {
    throw std::invalid_argument("certified_accuracy: outcomes and labels misaligned");
  }
  if (outcomes.empty()) throw std::invalid_argument("certified_accuracy: no outcomes");
  for (std::size_t i = 1; i < radii.size(); ++i) {
    if (radii[i] < radii[i - 1]) {
      throw std::invalid_argument("certified_accuracy: radii must be sorted ascending");
    }
  }
  CertifiedAccuracyCurve curve;
  curve.meta = std::move(meta);
  curve.radii.assign(radii.begin(), radii.end());
  curve.accuracy.reserve(radii.size());
  for (double r : radii) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      const auto& o = outcomes[i];
      if (o.certified() && o.label == labels[i] && o.radius >= r) ++hits;
    }
    curve.accuracy.push_back(static_cast<double>(hits) / static_cast<double>(outcomes.size()));
  }
  return curve;
}

double CertifierComparison::mean_radius_delta() const {
  if (radius_delta.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [idx, d] : radius_delta) sum += d;
  return sum / static_cast<double>(radius_delta.size());
}

CertifierComparison compare_certifiers(const ClassifierModel& f, const Dataset& data,
                                       const SmoothingConfig& cfg,
                                       const CertificationParams& params, RngStream rng,
                                       std::span<const double> radii, bool shared_counts) {
  params.validate();
  if (data.size() == 0) throw std::invalid_argument("compare_certifiers: empty dataset");

  CertifierComparison cmp;
  cmp.baseline.reserve(data.size());
  cmp.tcert.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const RngStream sample_rng = rng.split(static_cast<std::uint64_t>(i));
    if (shared_counts) {
      RngStream select_rng = sample_rng.split("select");
      RngStream estimate_rng = sample_rng.split("estimate");
      const CountVector selection =
          sample_under_noise(f, data.inputs[i], params.n0, cfg.sigma, select_rng);
      const CountVector estimation =
          sample_under_noise(f, data.inputs[i], params.n, cfg.sigma, estimate_rng);
      cmp.baseline.push_back(certify_baseline_from_counts(selection, estimation, cfg, params));
      cmp.tcert.push_back(t_certify_from_counts(selection, estimation, cfg, params));
    } else {
      cmp.baseline.push_back(
          certify_baseline(f, data.inputs[i], cfg, params, sample_rng.split("certify")));
      cmp.tcert.push_back(t_certify(f, data.inputs[i], cfg, params, sample_rng.split("tcertify")));
    }
    if (cmp.baseline.back().certified() && cmp.tcert.back().certified()) {
      cmp.radius_delta.emplace_back(i, cmp.tcert.back().radius - cmp.baseline.back().radius);
    }
  }
  CurveMetadata meta{"certify", cfg.sigma, 0.0, params.alpha, params.n, params.n0, "", rng.id()};
  cmp.baseline_curve = certified_accuracy(cmp.baseline, data.labels, radii, meta);
  meta.method = "tcertify";
  cmp.tcert_curve = certified_accuracy(cmp.tcert, data.labels, radii, meta);
  return cmp;
}

void write_results_csv(const std::string& path, std::span<const SampleResult> rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "idx,true_label,predicted,radius,correct,abstain,method,elapsed_ms\n";
  for (const auto& r : rows) {
    out << r.idx << ',' << r.true_label << ',' << r.predicted << ',' << format_double(r.radius)
        << ',' << (r.correct ? 1 : 0) << ',' << (r.abstain ? 1 : 0) << ',' << r.method << ','
        << format_double(r.elapsed_ms) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<SampleResult> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open results file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "idx,true_label,predicted,radius,correct,abstain,method,elapsed_ms") {
    throw IoError("results file header mismatch: " + path);
  }
  std::vector<SampleResult> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected 8 columns");
    }
    try {
      SampleResult r;
      r.idx = std::stoll(cells[0]);
      r.true_label = std::stoi(cells[1]);
      r.predicted = std::stoi(cells[2]);
      r.radius = std::stod(cells[3]);
      r.correct = std::stoi(cells[4]) != 0;
      r.abstain = std::stoi(cells[5]) != 0;
      r.method = cells[6];
      r.elapsed_ms = std::stod(cells[7]);
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw IoError(path + ":" + std::to_string(line_no) + ": malformed row");
    }
  }
  return rows;
}

void write_curve_csv(const std::string& path, std::span<const CertifiedAccuracyCurve> curves) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "radius,accuracy,method\n";
  for (const auto& curve : curves) {
    for (std::size_t i = 0; i < curve.radii.size(); ++i) {
      out << format_double(curve.radii[i]) << ',' << format_double(curve.accuracy[i]) << ','
          << curve.meta.method << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace smoothcert
