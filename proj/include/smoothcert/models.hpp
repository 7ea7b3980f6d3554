#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "smoothcert/rng.hpp"

namespace smoothcert {

// k pre-drawn perturbations of dimension dim, stored row-major.
class NoiseSet {
 public:
  NoiseSet(int k, int dim) : k_(k), dim_(dim), data_(static_cast<std::size_t>(k) * dim, 0.0) {}

  // k i.i.d. draws from N(0, sigma^2 I).
  static NoiseSet gaussian(RngStream& rng, int k, int dim, double sigma);

  int k() const { return k_; }
  int dim() const { return dim_; }
  std::span<const double> row(int j) const {
    return {data_.data() + static_cast<std::size_t>(j) * dim_, static_cast<std::size_t>(dim_)};
  }
  std::span<double> row(int j) {
    return {data_.data() + static_cast<std::size_t>(j) * dim_, static_cast<std::size_t>(dim_)};
  }

 private:
  int k_;
  int dim_;
  std::vector<double> data_;
};

// Base classifier interface: soft scores are a probability vector (softmax
// output); the hard label is the argmax with ties to the lowest index.
// Models are immutable after construction/loading; all methods are const and
// safe to call concurrently.
class ClassifierModel {
 public:
  virtual ~ClassifierModel() = default;

  virtual int input_dim() const = 0;
  virtual int num_classes() const = 0;
  virtual std::string variant() const = 0;

  // Writes the soft scores for x into scores_out (size num_classes()).
  virtual void forward_soft(std::span<const double> x, std::span<double> scores_out) const = 0;

  // Vector-Jacobian product: given dL/dscores, writes dL/dx into input_grad.
  virtual void score_input_gradient(std::span<const double> x,
                                    std::span<const double> score_grad,
                                    std::span<double> input_grad) const = 0;

  std::vector<double> forward_soft(std::span<const double> x) const;
  int predict(std::span<const double> x) const;
};

// Fully connected ReLU network with a softmax head. Parameters are stored
// per layer (row-major weights, then bias) and exposed flat in that order.
class MlpModel final : public ClassifierModel {
 public:
  struct Layer {
    int rows = 0;
    int cols = 0;
    std::vector<double> weights;  // row-major rows x cols
    std::vector<double> bias;     // rows
  };

  // dims = {input_dim, hidden..., num_classes}; weights start at zero.
  explicit MlpModel(std::vector<int> dims);

  // He-normal weight init, zero bias.
  static MlpModel he_initialized(std::vector<int> dims, RngStream rng);

  using ClassifierModel::forward_soft;

  int input_dim() const override { return dims_.front(); }
  int num_classes() const override { return dims_.back(); }
  std::string variant() const override { return "MLP"; }
  void forward_soft(std::span<const double> x, std::span<double> scores_out) const override;
  void score_input_gradient(std::span<const double> x, std::span<const double> score_grad,
                            std::span<double> input_grad) const override;

  // Backprop of dL/dscores at input x. Accumulates into param_grad (flat
  // layout, may be empty to skip) and writes dL/dx into input_grad (may be
  // empty to skip).
  void backward(std::span<const double> x, std::span<const double> score_grad,
                std::span<double> param_grad, std::span<double> input_grad) const;

  std::size_t num_parameters() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }
  const std::vector<int>& dims() const { return dims_; }

 private:
  std::vector<int> dims_;
  std::vector<Layer> layers_;
};

// Binary halfspace classifier. Soft scores are the two-class softmax of
// (-(w.x+b), +(w.x+b)); class 1 is the positive side of the hyperplane.
class LinearModel final : public ClassifierModel {
 public:
  LinearModel(std::vector<double> w, double b);

  using ClassifierModel::forward_soft;

  int input_dim() const override { return static_cast<int>(w_.size()); }
  int num_classes() const override { return 2; }
  std::string variant() const override { return "LINEAR"; }
  void forward_soft(std::span<const double> x, std::span<double> scores_out) const override;
  void score_input_gradient(std::span<const double> x, std::span<const double> score_grad,
                            std::span<double> input_grad) const override;

  double margin(std::span<const double> x) const;  // w.x + b
  const std::vector<double>& w() const { return w_; }
  double b() const { return b_; }

 private:
  std::vector<double> w_;
  double b_;
};

// Deterministic test classifier: nearest stored point wins (ties to the
// earliest entry); soft scores are one-hot.
class TableModel final : public ClassifierModel {
 public:
  TableModel(std::vector<std::vector<double>> points, std::vector<int> labels, int num_classes);

  using ClassifierModel::forward_soft;

  int input_dim() const override { return dim_; }
  int num_classes() const override { return num_classes_; }
  std::string variant() const override { return "TABLE"; }
  void forward_soft(std::span<const double> x, std::span<double> scores_out) const override;
  void score_input_gradient(std::span<const double> x, std::span<const double> score_grad,
                            std::span<double> input_grad) const override;

  int lookup(std::span<const double> x) const;
  const std::vector<std::vector<double>>& points() const { return points_; }
  const std::vector<int>& labels() const { return labels_; }

 private:
  int dim_;
  int num_classes_;
  std::vector<std::vector<double>> points_;
  std::vector<int> labels_;
};

// Plug-in smoothed score: mean of the soft scores over the perturbations,
//   (1/k) sum_j F(x + delta_j).
std::vector<double> plug_in_smoothed_score(const ClassifierModel& model,
                                           std::span<const double> x, const NoiseSet& noise);

// Smoothed positive-class probability of the hard linear classifier under
// N(0, sigma^2 I) input noise: Phi((w.x+b) / (sigma * ||w||)).
double exact_smoothed_prob_linear(std::span<const double> w, double b,
                                  std::span<const double> x, double sigma);

// Distance from x to the decision hyperplane: |w.x+b| / ||w||. The smoothed
// linear classifier provably keeps its prediction within this radius.
double true_robust_radius_linear(std::span<const double> w, double b,
                                 std::span<const double> x);

// Versioned JSON model files; doubles are written with round-trip precision
// so save -> load reproduces forward outputs bit for bit.
void save_model(const ClassifierModel& model, const std::string& path);
std::unique_ptr<ClassifierModel> load_model(const std::string& path);

}  // namespace smoothcert
