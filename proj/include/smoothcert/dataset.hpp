#pragma once

#include <string>
#include <vector>

#include "smoothcert/rng.hpp"

namespace smoothcert {

struct Dataset {
  int input_dim = 0;
  std::vector<std::vector<double>> inputs;
  std::vector<int> labels;

  std::size_t size() const { return inputs.size(); }
  int num_classes() const;  // max label + 1
};

// Gaussian blobs: class centers placed pairwise `separation` apart (regular
// simplex, requires dim >= num_classes - 1), unit within-class variance,
// shuffled. Deterministic for a fixed stream.
Dataset make_gaussian_blobs(int num_classes, int dim, int per_class, double separation,
                            RngStream rng);

// CSV with header "label,x0,x1,...": one row per example, integer label then
// input_dim features.
Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const std::string& path, const Dataset& data);

}  // namespace smoothcert
