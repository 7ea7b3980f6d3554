#include "smoothcert/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace smoothcert {
namespace {

constexpr double kLogClamp = 1e-12;

double safe_neg_log(double v) { return -std::log(std::max(v, kLogClamp)); }

// Derivative of -log(max(v, clamp)); zero below the clamp, matching the loss.
double neg_log_grad(double v) { return v > kLogClamp ? -1.0 / v : 0.0; }

int runner_up_class(std::span<const double> ghat, int y) {
  int best = -1;
  for (int c = 0; c < static_cast<int>(ghat.size()); ++c) {
    if (c == y) continue;
    if (best < 0 || ghat[c] > ghat[best]) best = c;
  }
  return best;
}

void check_example(const ClassifierModel& model, std::span<const double> x, int y,
                   const NoiseSet& noise) {
  if (static_cast<int>(x.size()) != model.input_dim() || noise.dim() != model.input_dim()) {
    throw std::invalid_argument("training: input dimension mismatch");
  }
  if (y < 0 || y >= model.num_classes()) throw std::invalid_argument("training: label out of range");
  if (model.num_classes() < 2) throw std::invalid_argument("training: need at least 2 classes");
}

// Soft scores at every perturbed point; one forward pass per perturbation is
// shared by the perturbed CE and the plug-in smoothed score.
std::vector<std::vector<double>> perturbed_scores(const ClassifierModel& model,
                                                  std::span<const double> x,
                                                  const NoiseSet& noise) {
  std::vector<std::vector<double>> scores(noise.k());
  std::vector<double> perturbed(x.size());
  for (int j = 0; j < noise.k(); ++j) {
    auto delta = noise.row(j);
    for (std::size_t i = 0; i < x.size(); ++i) perturbed[i] = x[i] + delta[i];
    scores[j] = model.forward_soft(perturbed);
  }
  return scores;
}

std::vector<double> mean_scores(const std::vector<std::vector<double>>& scores) {
  std::vector<double> mean(scores.front().size(), 0.0);
  for (const auto& s : scores) {
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += s[c];
  }
  for (double& v : mean) v /= static_cast<double>(scores.size());
  return mean;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(sigma > 0.0)) throw std::invalid_argument("train config: sigma must be positive");
  if (lambda < 0.0) throw std::invalid_argument("train config: lambda must be >= 0");
  if (k < 1) throw std::invalid_argument("train config: k must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("train config: epochs must be >= 0");
  if (!(lr > 0.0)) throw std::invalid_argument("train config: lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("train config: momentum must be in [0, 1)");
  }
  if (!(lr_decay.factor > 0.0) || lr_decay.every_n_epochs < 1) {
    throw std::invalid_argument("train config: bad lr decay");
  }
  if (adversarial) {
    if (adversarial->steps < 1) throw std::invalid_argument("train config: attack steps must be >= 1");
    if (!(adversarial->epsilon > 0.0)) {
      throw std::invalid_argument("train config: attack radius must be positive");
    }
    if (adversarial->step_size < 0.0) {
      throw std::invalid_argument("train config: attack step size must be >= 0");
    }
  }
}

double perturbed_ce_loss(const ClassifierModel& model, std::span<const double> x, int y,
                         const NoiseSet& noise) {
  check_example(model, x, y, noise);
  const auto scores = perturbed_scores(model, x, noise);
  double loss = 0.0;
  for (const auto& s : scores) loss += safe_neg_log(s[y]);
  return loss / static_cast<double>(noise.k());
}

double adre_loss(const ClassifierModel& model, std::span<const double> x, int y,
                 const NoiseSet& noise) {
  check_example(model, x, y, noise);
  const std::vector<double> ghat = plug_in_smoothed_score(model, x, noise);
  return safe_neg_log(ghat[runner_up_class(ghat, y)]);
}

std::vector<double> pgd_attack(const ClassifierModel& model, std::span<const double> x0, int y,
                               const AdversarialConfig& adv, double lambda, const NoiseSet& noise,
                               const PgdObserver& observer) {
  check_example(model, x0, y, noise);
  if (adv.steps < 1 || !(adv.epsilon > 0.0)) {
    throw std::invalid_argument("pgd_attack: invalid attack config");
  }
  const int dim = model.input_dim();
  const int num_classes = model.num_classes();
  const int k = noise.k();
  const double step = adv.resolved_step_size();

  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> perturbed(dim);
  std::vector<double> point_grad(dim);
  std::vector<double> total_grad(dim);
  std::vector<double> score_grad(num_classes);

  for (int t = 0; t < adv.steps; ++t) {
    const auto scores = perturbed_scores(model, x, noise);
    const std::vector<double> ghat = mean_scores(scores);
    const int yhat = runner_up_class(ghat, y);

    // Ascent objective: -log G[y] + lambda * log G[yhat].
    std::fill(score_grad.begin(), score_grad.end(), 0.0);
    score_grad[y] += neg_log_grad(ghat[y]) / k;
    score_grad[yhat] -= lambda * neg_log_grad(ghat[yhat]) / k;

    std::fill(total_grad.begin(), total_grad.end(), 0.0);
    for (int j = 0; j < k; ++j) {
      auto delta = noise.row(j);
      for (int i = 0; i < dim; ++i) perturbed[i] = x[i] + delta[i];
      model.score_input_gradient(perturbed, score_grad, point_grad);
      for (int i = 0; i < dim; ++i) total_grad[i] += point_grad[i];
    }

    for (int i = 0; i < dim; ++i) x[i] += step * total_grad[i];

    // Radial projection back onto the epsilon ball around x0.
    double dist2 = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double d = x[i] - x0[i];
      dist2 += d * d;
    }
    const double dist = std::sqrt(dist2);
    if (dist > adv.epsilon) {
      const double scale = adv.epsilon / dist;
      for (int i = 0; i < dim; ++i) x[i] = x0[i] + (x[i] - x0[i]) * scale;
    }
    if (observer) observer(x, x0);
  }
  return x;
}

namespace {

struct ExampleTerms {
  double l_per = 0.0;
  double l_adre = 0.0;
};

// Shared forward results for one example; fills per-perturbation score
// gradients for the combined loss l_per - lambda * l_adre.
ExampleTerms example_loss_terms(const std::vector<std::vector<double>>& scores, int y,
                                double lambda, int lper_pick,
                                std::vector<std::vector<double>>* score_grads) {
  const int k = static_cast<int>(scores.size());
  const int num_classes = static_cast<int>(scores.front().size());
  const std::vector<double> ghat = mean_scores(scores);
  const int yhat = runner_up_class(ghat, y);

  ExampleTerms terms;
  if (lper_pick >= 0) {
    terms.l_per = safe_neg_log(scores[lper_pick][y]);
  } else {
    for (const auto& s : scores) terms.l_per += safe_neg_log(s[y]);
    terms.l_per /= k;
  }
  terms.l_adre = safe_neg_log(ghat[yhat]);

  if (score_grads != nullptr) {
    score_grads->assign(k, std::vector<double>(num_classes, 0.0));
    // d(-lambda * l_adre)/ds_j[yhat] flows through the averaged score only.
    const double adre_term = -lambda * neg_log_grad(ghat[yhat]) / k;
    for (int j = 0; j < k; ++j) {
      auto& g = (*score_grads)[j];
      if (lper_pick >= 0) {
        if (j == lper_pick) g[y] += neg_log_grad(scores[j][y]);
      } else {
        g[y] += neg_log_grad(scores[j][y]) / k;
      }
      g[yhat] += adre_term;
    }
  }
  return terms;
}

void check_batch(std::span<const std::vector<double>> xs, std::span<const int> ys,
                 std::span<const NoiseSet> noise, std::span<const int> lper_pick) {
  if (xs.empty()) throw std::invalid_argument("batch: empty");
  if (xs.size() != ys.size() || xs.size() != noise.size()) {
    throw std::invalid_argument("batch: misaligned inputs");
  }
  if (!lper_pick.empty() && lper_pick.size() != xs.size()) {
    throw std::invalid_argument("batch: misaligned perturbation picks");
  }
}

BatchLossReport batch_pass(const MlpModel& model, std::span<const std::vector<double>> xs,
                           std::span<const int> ys, double lambda,
                           std::span<const NoiseSet> noise, std::span<const int> lper_pick,
                           std::vector<double>* gradient) {
  check_batch(xs, ys, noise, lper_pick);
  const std::size_t batch = xs.size();
  if (gradient != nullptr) gradient->assign(model.num_parameters(), 0.0);

  BatchLossReport report;
  std::vector<std::vector<double>> score_grads;
  std::vector<double> perturbed(model.input_dim());
  for (std::size_t i = 0; i < batch; ++i) {
    check_example(model, xs[i], ys[i], noise[i]);
    const int pick = lper_pick.empty() ? -1 : lper_pick[i];
    if (pick >= noise[i].k()) throw std::invalid_argument("batch: perturbation pick out of range");
    const auto scores = perturbed_scores(model, xs[i], noise[i]);
    const ExampleTerms terms = example_loss_terms(scores, ys[i], lambda, pick,
                                                  gradient != nullptr ? &score_grads : nullptr);
    report.l_per += terms.l_per;
    report.l_adre += terms.l_adre;
    if (gradient != nullptr) {
      const double inv_batch = 1.0 / static_cast<double>(batch);
      for (int j = 0; j < noise[i].k(); ++j) {
        auto delta = noise[i].row(j);
        for (std::size_t d = 0; d < perturbed.size(); ++d) perturbed[d] = xs[i][d] + delta[d];
        for (double& g : score_grads[j]) g *= inv_batch;
        model.backward(perturbed, score_grads[j], *gradient, {});
      }
    }
  }
  report.l_per /= static_cast<double>(batch);
  report.l_adre /= static_cast<double>(batch);
  report.total = report.l_per - lambda * report.l_adre;
  return report;
}

}  // namespace

BatchLossReport batch_loss(const MlpModel& model, std::span<const std::vector<double>> xs,
                           std::span<const int> ys, double lambda,
                           std::span<const NoiseSet> noise, std::span<const int> lper_pick) {
  return batch_pass(model, xs, ys, lambda, noise, lper_pick, nullptr);
}

BatchGradientResult batch_gradient(const MlpModel& model, std::span<const std::vector<double>> xs,
                                   std::span<const int> ys, double lambda,
                                   std::span<const NoiseSet> noise,
                                   std::span<const int> lper_pick) {
  BatchGradientResult result;
  result.report = batch_pass(model, xs, ys, lambda, noise, lper_pick, &result.gradient);
  return result;
}

TrainResult train(MlpModel& model, const Dataset& data, const TrainConfig& cfg, RngStream rng,
                  const TrainHooks* hooks) {
  cfg.validate();
  if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (data.input_dim != model.input_dim()) {
    throw std::invalid_argument("train: dataset dimension does not match model");
  }
  for (int y : data.labels) {
    if (y < 0 || y >= model.num_classes()) throw std::invalid_argument("train: label out of range");
  }

  const std::size_t n = data.size();
  const int dim = model.input_dim();
  RngStream shuffle_root = rng.split("shuffle");
  RngStream noise_root = rng.split("noise");

  std::vector<double> params = model.parameters();
  std::vector<double> velocity(params.size(), 0.0);
  std::vector<std::size_t> order(n);

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr * std::pow(cfg.lr_decay.factor, epoch / cfg.lr_decay.every_n_epochs);

    std::iota(order.begin(), order.end(), 0);
    RngStream shuffle = shuffle_root.split(static_cast<std::uint64_t>(epoch));
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[shuffle.next_below(i)]);
    }
    RngStream noise_stream = noise_root.split(static_cast<std::uint64_t>(epoch));

    double sum_l_per = 0.0;
    double sum_l_adre = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      const std::size_t batch = end - start;

      std::vector<NoiseSet> noise;
      std::vector<int> picks;
      std::vector<std::vector<double>> xs;
      std::vector<int> ys;
      noise.reserve(batch);
      xs.reserve(batch);
      ys.reserve(batch);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        noise.push_back(NoiseSet::gaussian(noise_stream, cfg.k, dim, cfg.sigma));
        if (cfg.single_perturbation_lper) {
          picks.push_back(static_cast<int>(noise_stream.next_below(cfg.k)));
        }
        if (hooks != nullptr && hooks->on_example_noise) {
          hooks->on_example_noise(idx, noise.back());
        }
        if (cfg.adversarial) {
          PgdObserver observer;
          if (hooks != nullptr && hooks->on_pgd_iterate) observer = hooks->on_pgd_iterate;
          xs.push_back(pgd_attack(model, data.inputs[idx], data.labels[idx], *cfg.adversarial,
                                  cfg.lambda, noise.back(), observer));
        } else {
          xs.push_back(data.inputs[idx]);
        }
        ys.push_back(data.labels[idx]);
      }

      const BatchGradientResult bg =
          batch_gradient(model, xs, ys, cfg.lambda, noise,
                         cfg.single_perturbation_lper ? std::span<const int>(picks)
                                                      : std::span<const int>());
      for (std::size_t p = 0; p < params.size(); ++p) {
        velocity[p] = cfg.momentum * velocity[p] + bg.gradient[p];
        params[p] -= lr * velocity[p];
      }
      model.set_parameters(params);

      sum_l_per += bg.report.l_per * static_cast<double>(batch);
      sum_l_adre += bg.report.l_adre * static_cast<double>(batch);
    }

    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (model.predict(data.inputs[i]) == data.labels[i]) ++correct;
    }

    EpochReport report;
    report.epoch = epoch + 1;
    report.l_per = sum_l_per / static_cast<double>(n);
    report.l_adre = sum_l_adre / static_cast<double>(n);
    report.total = report.l_per - cfg.lambda * report.l_adre;
    report.train_acc = static_cast<double>(correct) / static_cast<double>(n);
    result.epochs.push_back(report);
  }
  return result;
}

}  // namespace smoothcert
