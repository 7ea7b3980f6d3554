#include "smoothcert/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"
#include "smoothcert/errors.hpp"
#include "smoothcert/special_math.hpp"

namespace smoothcert {
namespace {

using nlohmann::json;

void check_dim(const ClassifierModel& m, std::span<const double> x) {
  if (static_cast<int>(x.size()) != m.input_dim()) {
    throw std::invalid_argument("input dimension mismatch: expected " +
                                std::to_string(m.input_dim()) + ", got " +
                                std::to_string(x.size()));
  }
}

void softmax_inplace(std::span<double> v) {
  double mx = v[0];
  for (double z : v) mx = std::max(mx, z);
  double sum = 0.0;
  for (double& z : v) {
    z = std::exp(z - mx);
    sum += z;
  }
  for (double& z : v) z /= sum;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace

NoiseSet NoiseSet::gaussian(RngStream& rng, int k, int dim, double sigma) {
  if (k < 1 || dim < 1) throw std::invalid_argument("NoiseSet: k and dim must be positive");
  NoiseSet out(k, dim);
  for (int j = 0; j < k; ++j) {
    auto row = out.row(j);
    for (int i = 0; i < dim; ++i) row[i] = sigma * rng.next_gaussian();
  }
  return out;
}

std::vector<double> ClassifierModel::forward_soft(std::span<const double> x) const {
  std::vector<double> scores(num_classes());
  forward_soft(x, scores);
  return scores;
}

int ClassifierModel::predict(std::span<const double> x) const {
  std::vector<double> scores = forward_soft(x);
  int best = 0;
  for (int c = 1; c < num_classes(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return best;
}

MlpModel::MlpModel(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw std::invalid_argument("MlpModel: need at least input and output dims");
  for (int d : dims_) {
    if (d < 1) throw std::invalid_argument("MlpModel: layer dims must be positive");
  }
  if (dims_.back() < 2) throw std::invalid_argument("MlpModel: need at least 2 classes");
  for (std::size_t l = 1; l < dims_.size(); ++l) {
    Layer layer;
    layer.rows = dims_[l];
    layer.cols = dims_[l - 1];
    layer.weights.assign(static_cast<std::size_t>(layer.rows) * layer.cols, 0.0);
    layer.bias.assign(layer.rows, 0.0);
    layers_.push_back(std::move(layer));
  }
}

MlpModel MlpModel::he_initialized(std::vector<int> dims, RngStream rng) {
  MlpModel model(std::move(dims));
  for (auto& layer : model.layers_) {
    const double scale = std::sqrt(2.0 / layer.cols);
    for (double& w : layer.weights) w = scale * rng.next_gaussian();
  }
  return model;
}

void MlpModel::forward_soft(std::span<const double> x, std::span<double> scores_out) const {
  check_dim(*this, x);
  std::vector<double> act(x.begin(), x.end());
  std::vector<double> next;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    next.assign(layer.rows, 0.0);
    for (int r = 0; r < layer.rows; ++r) {
      const double* wrow = layer.weights.data() + static_cast<std::size_t>(r) * layer.cols;
      double z = layer.bias[r];
      for (int c = 0; c < layer.cols; ++c) z += wrow[c] * act[c];
      next[r] = (l + 1 < layers_.size()) ? std::max(0.0, z) : z;
    }
    act.swap(next);
  }
  std::copy(act.begin(), act.end(), scores_out.begin());
  softmax_inplace(scores_out);
}

void MlpModel::backward(std::span<const double> x, std::span<const double> score_grad,
                        std::span<double> param_grad, std::span<double> input_grad) const {
  check_dim(*this, x);
  const std::size_t num_layers = layers_.size();

  // Forward pass keeping pre-activations.
  std::vector<std::vector<double>> acts(num_layers + 1);   // acts[0] = x
  std::vector<std::vector<double>> preact(num_layers);
  acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < num_layers; ++l) {
    const Layer& layer = layers_[l];
    preact[l].assign(layer.rows, 0.0);
    acts[l + 1].assign(layer.rows, 0.0);
    for (int r = 0; r < layer.rows; ++r) {
      const double* wrow = layer.weights.data() + static_cast<std::size_t>(r) * layer.cols;
      double z = layer.bias[r];
      for (int c = 0; c < layer.cols; ++c) z += wrow[c] * acts[l][c];
      preact[l][r] = z;
      acts[l + 1][r] = (l + 1 < num_layers) ? std::max(0.0, z) : z;
    }
  }

  // Softmax Jacobian: dL/dz = s .* (g - <s, g>).
  std::vector<double> scores = acts[num_layers];
  softmax_inplace(scores);
  const double sg = dot(scores, score_grad);
  std::vector<double> delta(scores.size());
  for (std::size_t c = 0; c < scores.size(); ++c) delta[c] = scores[c] * (score_grad[c] - sg);

  std::size_t offset_end = num_parameters();
  std::vector<double> prev_delta;
  for (std::size_t li = num_layers; li-- > 0;) {
    const Layer& layer = layers_[li];
    const std::size_t layer_params = static_cast<std::size_t>(layer.rows) * layer.cols + layer.rows;
    const std::size_t offset = offset_end - layer_params;
    if (!param_grad.empty()) {
      double* gw = param_grad.data() + offset;
      double* gb = gw + static_cast<std::size_t>(layer.rows) * layer.cols;
      for (int r = 0; r < layer.rows; ++r) {
        const double d = delta[r];
        double* gwrow = gw + static_cast<std::size_t>(r) * layer.cols;
        const double* a = acts[li].data();
        for (int c = 0; c < layer.cols; ++c) gwrow[c] += d * a[c];
        gb[r] += d;
      }
    }
    if (li > 0 || !input_grad.empty()) {
      prev_delta.assign(layer.cols, 0.0);
      for (int r = 0; r < layer.rows; ++r) {
        const double d = delta[r];
        const double* wrow = layer.weights.data() + static_cast<std::size_t>(r) * layer.cols;
        for (int c = 0; c < layer.cols; ++c) prev_delta[c] += wrow[c] * d;
      }
      if (li > 0) {
        // ReLU derivative, with relu'(0) = 0.
        for (int c = 0; c < layer.cols; ++c) {
          if (preact[li - 1][c] <= 0.0) prev_delta[c] = 0.0;
        }
      } else if (!input_grad.empty()) {
        std::copy(prev_delta.begin(), prev_delta.end(), input_grad.begin());
      }
      delta.swap(prev_delta);
    }
    offset_end = offset;
  }
}

void MlpModel::score_input_gradient(std::span<const double> x, std::span<const double> score_grad,
                                    std::span<double> input_grad) const {
  backward(x, score_grad, {}, input_grad);
}

std::size_t MlpModel::num_parameters() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    n += static_cast<std::size_t>(layer.rows) * layer.cols + layer.rows;
  }
  return n;
}

std::vector<double> MlpModel::parameters() const {
  std::vector<double> out;
  out.reserve(num_parameters());
  for (const auto& layer : layers_) {
    out.insert(out.end(), layer.weights.begin(), layer.weights.end());
    out.insert(out.end(), layer.bias.begin(), layer.bias.end());
  }
  return out;
}

void MlpModel::set_parameters(std::span<const double> params) {
  if (params.size() != num_parameters()) {
    throw std::invalid_argument("set_parameters: wrong parameter count");
  }
  std::size_t offset = 0;
  for (auto& layer : layers_) {
    const std::size_t nw = static_cast<std::size_t>(layer.rows) * layer.cols;
    std::copy(params.begin() + offset, params.begin() + offset + nw, layer.weights.begin());
    offset += nw;
    std::copy(params.begin() + offset, params.begin() + offset + layer.rows, layer.bias.begin());
    offset += layer.rows;
  }
}

LinearModel::LinearModel(std::vector<double> w, double b) : w_(std::move(w)), b_(b) {
  if (w_.empty()) throw std::invalid_argument("LinearModel: empty weight vector");
}

double LinearModel::margin(std::span<const double> x) const {
  check_dim(*this, x);
  return dot(w_, x) + b_;
}

void LinearModel::forward_soft(std::span<const double> x, std::span<double> scores_out) const {
  const double m = margin(x);
  scores_out[0] = -m;
  scores_out[1] = m;
  softmax_inplace(scores_out);
}

void LinearModel::score_input_gradient(std::span<const double> x,
                                       std::span<const double> score_grad,
                                       std::span<double> input_grad) const {
  const double m = margin(x);
  const double s1 = 1.0 / (1.0 + std::exp(-2.0 * m));
  const double s0 = 1.0 - s1;
  const double factor = 2.0 * s0 * s1 * (score_grad[1] - score_grad[0]);
  for (std::size_t i = 0; i < w_.size(); ++i) input_grad[i] = factor * w_[i];
}

TableModel::TableModel(std::vector<std::vector<double>> points, std::vector<int> labels,
                       int num_classes)
    : num_classes_(num_classes), points_(std::move(points)), labels_(std::move(labels)) {
  if (points_.empty() || points_.size() != labels_.size()) {
    throw std::invalid_argument("TableModel: points and labels must be non-empty and aligned");
  }
  if (num_classes_ < 2) throw std::invalid_argument("TableModel: need at least 2 classes");
  dim_ = static_cast<int>(points_.front().size());
  for (const auto& p : points_) {
    if (static_cast<int>(p.size()) != dim_) {
      throw std::invalid_argument("TableModel: inconsistent point dimensions");
    }
  }
  for (int l : labels_) {
    if (l < 0 || l >= num_classes_) throw std::invalid_argument("TableModel: label out of range");
  }
}

int TableModel::lookup(std::span<const double> x) const {
  check_dim(*this, x);
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points_.size(); ++i) {
    double d = 0.0;
    for (int j = 0; j < dim_; ++j) {
      const double diff = points_[i][j] - x[j];
      d += diff * diff;
    }
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return labels_[best];
}

void TableModel::forward_soft(std::span<const double> x, std::span<double> scores_out) const {
  std::fill(scores_out.begin(), scores_out.end(), 0.0);
  scores_out[lookup(x)] = 1.0;
}

void TableModel::score_input_gradient(std::span<const double>, std::span<const double>,
                                      std::span<double> input_grad) const {
  std::fill(input_grad.begin(), input_grad.end(), 0.0);
}

std::vector<double> plug_in_smoothed_score(const ClassifierModel& model,
                                           std::span<const double> x, const NoiseSet& noise) {
  check_dim(model, x);
  if (noise.dim() != model.input_dim()) {
    throw std::invalid_argument("plug_in_smoothed_score: noise dimension mismatch");
  }
  const int k = noise.k();
  std::vector<double> perturbed(x.size());
  std::vector<double> scores(model.num_classes());
  std::vector<double> mean(model.num_classes(), 0.0);
  for (int j = 0; j < k; ++j) {
    auto delta = noise.row(j);
    for (std::size_t i = 0; i < x.size(); ++i) perturbed[i] = x[i] + delta[i];
    model.forward_soft(perturbed, scores);
    for (int c = 0; c < model.num_classes(); ++c) mean[c] += scores[c];
  }
  for (double& v : mean) v /= k;
  return mean;
}

double exact_smoothed_prob_linear(std::span<const double> w, double b,
                                  std::span<const double> x, double sigma) {
  const double wn = norm2(w);
  if (wn == 0.0) throw std::domain_error("exact_smoothed_prob_linear: zero weight vector");
  if (!(sigma > 0.0)) throw std::domain_error("exact_smoothed_prob_linear: sigma must be positive");
  return std_normal_cdf((dot(w, x) + b) / (sigma * wn));
}

double true_robust_radius_linear(std::span<const double> w, double b,
                                 std::span<const double> x) {
  const double wn = norm2(w);
  if (wn == 0.0) throw std::domain_error("true_robust_radius_linear: zero weight vector");
  return std::fabs(dot(w, x) + b) / wn;
}

namespace {

json mlp_to_json(const MlpModel& m) {
  json layers = json::array();
  for (const auto& layer : m.layers()) {
    layers.push_back({{"rows", layer.rows},
                      {"cols", layer.cols},
                      {"weights", layer.weights},
                      {"bias", layer.bias}});
  }
  return {{"version", 1},
          {"variant", "MLP"},
          {"input_dim", m.input_dim()},
          {"num_classes", m.num_classes()},
          {"activation", "relu"},
          {"layers", layers}};
}

std::unique_ptr<ClassifierModel> mlp_from_json(const json& j) {
  if (j.at("activation").get<std::string>() != "relu") {
    throw IoError("model file: unsupported activation");
  }
  std::vector<int> dims;
  dims.push_back(j.at("input_dim").get<int>());
  for (const auto& jl : j.at("layers")) dims.push_back(jl.at("rows").get<int>());
  auto model = std::make_unique<MlpModel>(dims);
  auto& layers = model->mutable_layers();
  const auto& jlayers = j.at("layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& jl = jlayers[l];
    if (jl.at("cols").get<int>() != layers[l].cols) {
      throw IoError("model file: inconsistent layer dimensions");
    }
    jl.at("weights").get_to(layers[l].weights);
    jl.at("bias").get_to(layers[l].bias);
    if (layers[l].weights.size() != static_cast<std::size_t>(layers[l].rows) * layers[l].cols ||
        layers[l].bias.size() != static_cast<std::size_t>(layers[l].rows)) {
      throw IoError("model file: layer size mismatch");
    }
  }
  if (model->num_classes() != j.at("num_classes").get<int>()) {
    throw IoError("model file: num_classes mismatch");
  }
  return model;
}

}  // namespace

void save_model(const ClassifierModel& model, const std::string& path) {
  json j;
  if (const auto* mlp = dynamic_cast<const MlpModel*>(&model)) {
    j = mlp_to_json(*mlp);
  } else if (const auto* lin = dynamic_cast<const LinearModel*>(&model)) {
    j = {{"version", 1},
         {"variant", "LINEAR"},
         {"input_dim", lin->input_dim()},
         {"num_classes", 2},
         {"w", lin->w()},
         {"b", lin->b()}};
  } else if (const auto* table = dynamic_cast<const TableModel*>(&model)) {
    j = {{"version", 1},
         {"variant", "TABLE"},
         {"input_dim", table->input_dim()},
         {"num_classes", table->num_classes()},
         {"points", table->points()},
         {"labels", table->labels()}};
  } else {
    throw std::invalid_argument("save_model: unknown model variant");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

std::unique_ptr<ClassifierModel> load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("model file parse error: " + path + ": " + e.what());
  }
  try {
    if (j.at("version").get<int>() != 1) throw IoError("model file: unsupported version");
    const std::string variant = j.at("variant").get<std::string>();
    if (variant == "MLP") return mlp_from_json(j);
    if (variant == "LINEAR") {
      return std::make_unique<LinearModel>(j.at("w").get<std::vector<double>>(),
                                           j.at("b").get<double>());
    }
    if (variant == "TABLE") {
      return std::make_unique<TableModel>(
          j.at("points").get<std::vector<std::vector<double>>>(),
          j.at("labels").get<std::vector<int>>(), j.at("num_classes").get<int>());
    }
    throw IoError("model file: unknown variant " + variant);
  } catch (const json::exception& e) {
    throw IoError("model file schema error: " + path + ": " + e.what());
  }
}

}  // namespace smoothcert
