#include "smoothcert/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "smoothcert/errors.hpp"
#include "smoothcert/io_util.hpp"

namespace smoothcert {
namespace {

// C vertices of a regular simplex with the given edge length, embedded in
// `dim` coordinates (zero-padded). Construction: center the standard basis
// vectors of R^C (pairwise distance sqrt(2)), express them in an orthonormal
// basis of the sum-zero hyperplane, then rescale.
std::vector<std::vector<double>> simplex_centers(int num_classes, int dim, double edge) {
  const int c = num_classes;
  if (dim < c - 1) {
    throw std::invalid_argument("gaussian blobs: need dim >= classes - 1 for equidistant centers");
  }
  // Centered basis vectors q_i = e_i - (1/C) * ones, as rows.
  std::vector<std::vector<double>> q(c, std::vector<double>(c, -1.0 / c));
  for (int i = 0; i < c; ++i) q[i][i] += 1.0;

  // Gram-Schmidt on the differences q_i - q_{c-1} spans the hyperplane.
  std::vector<std::vector<double>> basis;
  for (int i = 0; i + 1 < c; ++i) {
    std::vector<double> v(c);
    for (int j = 0; j < c; ++j) v[j] = q[i][j] - q[c - 1][j];
    for (const auto& b : basis) {
      double proj = 0.0;
      for (int j = 0; j < c; ++j) proj += v[j] * b[j];
      for (int j = 0; j < c; ++j) v[j] -= proj * b[j];
    }
    double nrm = 0.0;
    for (double x : v) nrm += x * x;
    nrm = std::sqrt(nrm);
    for (double& x : v) x /= nrm;
    basis.push_back(std::move(v));
  }

  const double scale = edge / std::sqrt(2.0);
  std::vector<std::vector<double>> centers(c, std::vector<double>(dim, 0.0));
  for (int i = 0; i < c; ++i) {
    for (std::size_t k = 0; k < basis.size(); ++k) {
      double coord = 0.0;
      for (int j = 0; j < c; ++j) coord += q[i][j] * basis[k][j];
      centers[i][k] = scale * coord;
    }
  }
  return centers;
}

}  // namespace

int Dataset::num_classes() const {
  int mx = -1;
  for (int l : labels) mx = std::max(mx, l);
  return mx + 1;
}

Dataset make_gaussian_blobs(int num_classes, int dim, int per_class, double separation,
                            RngStream rng) {
  if (num_classes < 2) throw std::invalid_argument("gaussian blobs: need at least 2 classes");
  if (dim < 1 || per_class < 1) throw std::invalid_argument("gaussian blobs: bad dim or size");
  if (!(separation >= 0.0)) throw std::invalid_argument("gaussian blobs: bad separation");

  const auto centers = separation > 0.0
                           ? simplex_centers(num_classes, dim, separation)
                           : std::vector<std::vector<double>>(
                                 num_classes, std::vector<double>(dim, 0.0));

  Dataset data;
  data.input_dim = dim;
  RngStream noise = rng.split("points");
  for (int c = 0; c < num_classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      std::vector<double> x(dim);
      for (int j = 0; j < dim; ++j) x[j] = centers[c][j] + noise.next_gaussian();
      data.inputs.push_back(std::move(x));
      data.labels.push_back(c);
    }
  }

  // Fisher-Yates with the dedicated shuffle stream.
  RngStream shuffle = rng.split("shuffle");
  for (std::size_t i = data.size(); i > 1; --i) {
    const std::size_t j = shuffle.next_below(i);
    std::swap(data.inputs[i - 1], data.inputs[j]);
    std::swap(data.labels[i - 1], data.labels[j]);
  }
  return data;
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset: " + path);
  Dataset data;
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("label", 0) == 0) continue;  // header row
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    int label = -1;
    bool have_label = false;
    while (std::getline(ss, cell, ',')) {
      try {
        if (!have_label) {
          label = std::stoi(cell);
          have_label = true;
        } else {
          row.push_back(std::stod(cell));
        }
      } catch (const std::exception&) {
        throw IoError(path + ":" + std::to_string(line_no) + ": malformed value '" + cell + "'");
      }
    }
    if (!have_label || row.empty()) {
      throw IoError(path + ":" + std::to_string(line_no) + ": malformed row");
    }
    if (label < 0) throw IoError(path + ":" + std::to_string(line_no) + ": negative label");
    if (data.input_dim == 0) {
      data.input_dim = static_cast<int>(row.size());
    } else if (static_cast<int>(row.size()) != data.input_dim) {
      throw IoError(path + ":" + std::to_string(line_no) + ": inconsistent feature count");
    }
    data.inputs.push_back(std::move(row));
    data.labels.push_back(label);
  }
  if (data.inputs.empty()) throw IoError("dataset is empty: " + path);
  return data;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "label";
  for (int j = 0; j < data.input_dim; ++j) out << ",x" << j;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.labels[i];
    for (double v : data.inputs[i]) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace smoothcert
