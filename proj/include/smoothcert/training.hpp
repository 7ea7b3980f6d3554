#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "smoothcert/dataset.hpp"
#include "smoothcert/models.hpp"
#include "smoothcert/rng.hpp"

namespace smoothcert {

struct AdversarialConfig {
  int steps = 1;          // PGD iterations M
  double epsilon = 0.0;   // l2 attack radius
  double step_size = 0.0; // 0 selects the default 2 * epsilon / steps

  double resolved_step_size() const {
    return step_size > 0.0 ? step_size : 2.0 * epsilon / steps;
  }
};

struct LrDecay {
  double factor = 0.1;
  int every_n_epochs = 50;
};

struct TrainConfig {
  double sigma = 0.25;
  double lambda = 0.0;  // regularizer weight, >= 0
  int k = 1;            // perturbations per example
  int batch_size = 32;
  int epochs = 1;
  double lr = 0.1;
  double momentum = 0.9;
  LrDecay lr_decay;
  std::uint64_t seed = 0;
  std::optional<AdversarialConfig> adversarial;
  // Compute the perturbed CE from one randomly chosen perturbation of the k
  // drawn instead of the full k-average.
  bool single_perturbation_lper = false;

  void validate() const;  // throws std::invalid_argument
};

struct BatchLossReport {
  double l_per = 0.0;   // mean perturbed cross-entropy
  double l_adre = 0.0;  // mean regularizer term
  double total = 0.0;   // l_per - lambda * l_adre
};

struct EpochReport {
  int epoch = 0;  // 1-based
  double l_per = 0.0;
  double l_adre = 0.0;
  double total = 0.0;
  double train_acc = 0.0;
};

struct TrainResult {
  std::vector<EpochReport> epochs;
};

struct TrainHooks {
  // Called once per example per batch with the freshly drawn perturbation
  // set; the same set drives the attack, the perturbed CE and the plug-in
  // smoothed score.
  std::function<void(std::size_t dataset_index, const NoiseSet& noise)> on_example_noise;
  // Called after every PGD projection step.
  std::function<void(std::span<const double> iterate, std::span<const double> x0)> on_pgd_iterate;
};

// (1/k) sum_j -log F^y(x + delta_j); the log argument is clamped at 1e-12.
double perturbed_ce_loss(const ClassifierModel& model, std::span<const double> x, int y,
                         const NoiseSet& noise);

// Cross-entropy of the plug-in smoothed score against the strongest class
// other than y: with G = plug_in_smoothed_score(model, x, noise) and
// yhat = argmax_{c != y} G[c] (ties to the lowest index), returns -log G[yhat].
// The argmax index is a constant under differentiation.
double adre_loss(const ClassifierModel& model, std::span<const double> x, int y,
                 const NoiseSet& noise);

using PgdObserver = std::function<void(std::span<const double> iterate, std::span<const double> x0)>;

// l2 projected gradient ascent on
//   CE(G(x), y) - lambda * CE(G(x), argmax_{c != y} G[c])
// around x0, reusing the same noise set at every iteration. Every iterate
// (and the result) satisfies ||x - x0||_2 <= epsilon.
std::vector<double> pgd_attack(const ClassifierModel& model, std::span<const double> x0, int y,
                               const AdversarialConfig& adv, double lambda, const NoiseSet& noise,
                               const PgdObserver& observer = {});

struct BatchGradientResult {
  std::vector<double> gradient;  // flat, mean over batch
  BatchLossReport report;
};

// Loss of mean(l_per - lambda * l_adre) over the batch; noise[i] drives both
// terms of example i. When lper_pick is non-empty, the perturbed CE of
// example i uses only perturbation lper_pick[i].
BatchLossReport batch_loss(const MlpModel& model, std::span<const std::vector<double>> xs,
                           std::span<const int> ys, double lambda,
                           std::span<const NoiseSet> noise, std::span<const int> lper_pick = {});

// Exact backpropagated gradient of the batch loss with respect to all model
// parameters. The regularizer gradient flows through the averaged softmax
// but not through the argmax selection.
BatchGradientResult batch_gradient(const MlpModel& model, std::span<const std::vector<double>> xs,
                                   std::span<const int> ys, double lambda,
                                   std::span<const NoiseSet> noise,
                                   std::span<const int> lper_pick = {});

// Mini-batch SGD with momentum on the regularized perturbed risk. With an
// adversarial config, every batch example is first replaced by its PGD attack
// (same noise set), and the loss is evaluated at the attacked point.
// Single-threaded and bit-deterministic for a fixed config and stream.
TrainResult train(MlpModel& model, const Dataset& data, const TrainConfig& cfg, RngStream rng,
                  const TrainHooks* hooks = nullptr);

}  // namespace smoothcert
