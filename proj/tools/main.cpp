// smoothcert: train base classifiers under Gaussian augmentation and certify
// the l2 robustness of their smoothed counterparts.
//
// Subcommands: gen-data, train, certify, evaluate. Every command writes a
// JSON manifest next to its primary output with the resolved parameters,
// seed, and input/output checksums.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "smoothcert/dataset.hpp"
#include "smoothcert/errors.hpp"
#include "smoothcert/evaluation.hpp"
#include "smoothcert/io_util.hpp"
#include "smoothcert/models.hpp"
#include "smoothcert/smoothing.hpp"
#include "smoothcert/training.hpp"

namespace {

using nlohmann::json;
using namespace smoothcert;

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(cell, &pos));
      if (pos != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw UsageError("bad value '" + cell + "' in " + flag);
    }
  }
  if (out.empty()) throw UsageError(flag + " must be a non-empty comma-separated list");
  return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  for (double v : parse_double_list(text, flag)) {
    const int i = static_cast<int>(v);
    if (v != i) throw UsageError(flag + " must contain integers");
    out.push_back(i);
  }
  return out;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

json file_entry(const std::string& path) {
  return {{"path", path}, {"checksum_fnv1a64", file_checksum_hex(path)}};
}

void write_manifest(const std::string& primary_output, const std::string& command,
                    const json& parameters, std::uint64_t seed,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, double wall_clock_ms) {
  json inputs_json = json::array();
  for (const auto& p : inputs) inputs_json.push_back(file_entry(p));
  json outputs_json = json::array();
  for (const auto& p : outputs) outputs_json.push_back(file_entry(p));
  const json manifest = {{"tool", "smoothcert"},
                         {"manifest_version", 1},
                         {"command", command},
                         {"parameters", parameters},
                         {"seed", seed},
                         {"inputs", inputs_json},
                         {"outputs", outputs_json},
                         {"wall_clock_ms", wall_clock_ms}};
  const std::string path = primary_output + ".manifest.json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// gen-data

struct GenDataArgs {
  std::string out;
  int classes = 2;
  int dim = 2;
  int per_class = 100;
  double separation = 4.0;
  std::uint64_t seed = 0;
};

int run_gen_data(const GenDataArgs& a) {
  Stopwatch watch;
  if (a.classes < 2) throw UsageError("--classes must be >= 2");
  if (a.dim < 1) throw UsageError("--dim must be >= 1");
  if (a.per_class < 1) throw UsageError("--per-class must be >= 1");
  if (!(a.separation > 0.0)) throw UsageError("--separation must be > 0");
  if (a.dim < a.classes - 1) throw UsageError("--dim must be >= classes - 1");

  const Dataset data = make_gaussian_blobs(a.classes, a.dim, a.per_class, a.separation,
                                           RngStream(a.seed).split("data"));
  write_dataset_csv(a.out, data);
  const json params = {{"classes", a.classes},
                       {"dim", a.dim},
                       {"per_class", a.per_class},
                       {"separation", a.separation}};
  write_manifest(a.out, "gen-data", params, a.seed, {}, {a.out}, watch.elapsed_ms());
  std::cout << "wrote " << data.size() << " examples to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data;
  std::string out;
  std::string log;  // defaults to <out>.log.csv
  std::string hidden = "64,64";
  double sigma = 0.25;
  double lambda = 0.0;
  int k = 1;
  int epochs = 50;
  int batch_size = 32;
  double lr = 0.1;
  double momentum = 0.9;
  double lr_decay_factor = 0.1;
  int lr_decay_epochs = 50;
  std::uint64_t seed = 0;
  int adv_steps = 0;
  double adv_eps = 0.0;
  double adv_step_size = 0.0;
  bool single_perturbation_lper = false;
};

int run_train(const TrainArgs& a) {
  Stopwatch watch;
  const Dataset data = read_dataset_csv(a.data);
  const int num_classes = data.num_classes();
  if (num_classes < 2) throw UsageError("dataset must contain at least 2 classes");

  TrainConfig cfg;
  cfg.sigma = a.sigma;
  cfg.lambda = a.lambda;
  cfg.k = a.k;
  cfg.batch_size = a.batch_size;
  cfg.epochs = a.epochs;
  cfg.lr = a.lr;
  cfg.momentum = a.momentum;
  cfg.lr_decay = {a.lr_decay_factor, a.lr_decay_epochs};
  cfg.seed = a.seed;
  cfg.single_perturbation_lper = a.single_perturbation_lper;
  if (a.adv_steps > 0) {
    if (!(a.adv_eps > 0.0)) throw UsageError("--adv-eps must be > 0 with --adv-steps");
    cfg.adversarial = AdversarialConfig{a.adv_steps, a.adv_eps, a.adv_step_size};
  } else if (a.adv_eps > 0.0 || a.adv_step_size > 0.0) {
    throw UsageError("--adv-eps/--adv-step-size require --adv-steps");
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  std::vector<int> dims;
  dims.push_back(data.input_dim);
  for (int h : parse_int_list(a.hidden, "--hidden")) {
    if (h < 1) throw UsageError("--hidden sizes must be positive");
    dims.push_back(h);
  }
  dims.push_back(num_classes);

  MlpModel model = MlpModel::he_initialized(dims, RngStream(a.seed).split("init"));
  const TrainResult log = train(model, data, cfg, RngStream(a.seed).split("train"));
  save_model(model, a.out);

  const std::string log_path = a.log.empty() ? a.out + ".log.csv" : a.log;
  {
    std::ofstream out(log_path);
    if (!out) throw IoError("cannot open for writing: " + log_path);
    out << "epoch,l_per,l_adre,total,train_acc\n";
    for (const auto& e : log.epochs) {
      out << e.epoch << ',' << format_double(e.l_per) << ',' << format_double(e.l_adre) << ','
          << format_double(e.total) << ',' << format_double(e.train_acc) << '\n';
    }
    if (!out) throw IoError("write failed: " + log_path);
  }

  json params = {{"hidden", a.hidden},
                 {"sigma", a.sigma},
                 {"lambda", a.lambda},
                 {"k", a.k},
                 {"epochs", a.epochs},
                 {"batch_size", a.batch_size},
                 {"lr", a.lr},
                 {"momentum", a.momentum},
                 {"lr_decay_factor", a.lr_decay_factor},
                 {"lr_decay_epochs", a.lr_decay_epochs},
                 {"single_perturbation_lper", a.single_perturbation_lper}};
  if (cfg.adversarial) {
    params["adv_steps"] = cfg.adversarial->steps;
    params["adv_eps"] = cfg.adversarial->epsilon;
    params["adv_step_size"] = cfg.adversarial->resolved_step_size();
  }
  write_manifest(a.out, "train", params, a.seed, {a.data}, {a.out, log_path}, watch.elapsed_ms());

  if (!log.epochs.empty()) {
    const auto& last = log.epochs.back();
    std::cout << "trained " << a.out << ": final total loss " << format_double(last.total)
              << ", train accuracy " << format_double(last.train_acc) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// certify

struct CertifyArgs {
  std::string model;
  std::string data;
  std::string out;
  std::string method = "both";  // certify | tcertify | both
  double sigma = 0.25;
  std::int64_t n0 = 100;
  std::int64_t n = 100000;
  double alpha = 0.001;
  std::string grid = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0";
  std::uint64_t seed = 0;
  std::int64_t max_samples = 0;  // 0 = all
  int threads = 1;
  bool independent_draws = false;
  bool timing = false;
};

int run_certify(const CertifyArgs& a) {
  Stopwatch watch;
  if (a.method != "certify" && a.method != "tcertify" && a.method != "both") {
    throw UsageError("--method must be one of certify, tcertify, both");
  }
  if (a.threads < 1) throw UsageError("--threads must be >= 1");

  CertificationParams params;
  params.n0 = a.n0;
  params.n = a.n;
  params.alpha = a.alpha;
  params.grid = parse_double_list(a.grid, "--grid");
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!(a.sigma > 0.0)) throw UsageError("--sigma must be > 0");

  const auto model = load_model(a.model);
  Dataset data = read_dataset_csv(a.data);
  if (data.input_dim != model->input_dim()) {
    throw std::invalid_argument("dataset dimension " + std::to_string(data.input_dim) +
                                " does not match model dimension " +
                                std::to_string(model->input_dim()));
  }
  std::size_t count = data.size();
  if (a.max_samples > 0) count = std::min<std::size_t>(count, a.max_samples);

  const SmoothingConfig cfg{a.sigma};
  const bool run_baseline = a.method != "tcertify";
  const bool run_tcert = a.method != "certify";
  const RngStream certify_root = RngStream(a.seed).split("certify");

  std::vector<CertificationOutcome> baseline(run_baseline ? count : 0);
  std::vector<CertificationOutcome> tcert(run_tcert ? count : 0);
  std::vector<double> baseline_ms(run_baseline ? count : 0, 0.0);
  std::vector<double> tcert_ms(run_tcert ? count : 0, 0.0);

  const auto certify_sample = [&](std::size_t i) {
    const RngStream sample_rng = certify_root.split(static_cast<std::uint64_t>(i));
    if (a.independent_draws) {
      if (run_baseline) {
        Stopwatch t;
        baseline[i] =
            certify_baseline(*model, data.inputs[i], cfg, params, sample_rng.split("certify"));
        if (a.timing) baseline_ms[i] = t.elapsed_ms();
      }
      if (run_tcert) {
        Stopwatch t;
        tcert[i] = t_certify(*model, data.inputs[i], cfg, params, sample_rng.split("tcertify"));
        if (a.timing) tcert_ms[i] = t.elapsed_ms();
      }
      return;
    }
    RngStream select_rng = sample_rng.split("select");
    RngStream estimate_rng = sample_rng.split("estimate");
    const CountVector selection =
        sample_under_noise(*model, data.inputs[i], params.n0, cfg.sigma, select_rng);
    const CountVector estimation =
        sample_under_noise(*model, data.inputs[i], params.n, cfg.sigma, estimate_rng);
    if (run_baseline) {
      Stopwatch t;
      baseline[i] = certify_baseline_from_counts(selection, estimation, cfg, params);
      if (a.timing) baseline_ms[i] = t.elapsed_ms();
    }
    if (run_tcert) {
      Stopwatch t;
      tcert[i] = t_certify_from_counts(selection, estimation, cfg, params);
      if (a.timing) tcert_ms[i] = t.elapsed_ms();
    }
  };

  if (a.threads == 1) {
    for (std::size_t i = 0; i < count; ++i) certify_sample(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(a.threads);
    for (int t = 0; t < a.threads; ++t) {
      workers.emplace_back([&]() {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
          certify_sample(i);
        }
      });
    }
    for (auto& w : workers) w.join();
  }

  // Output rows are ordered by method block then sample index, independent of
  // the thread schedule.
  std::vector<SampleResult> rows;
  rows.reserve((run_baseline ? count : 0) + (run_tcert ? count : 0));
  const auto append_rows = [&](const std::vector<CertificationOutcome>& outcomes,
                               const std::vector<double>& ms, const std::string& method) {
    for (std::size_t i = 0; i < count; ++i) {
      const auto& o = outcomes[i];
      SampleResult r;
      r.idx = static_cast<std::int64_t>(i);
      r.true_label = data.labels[i];
      r.predicted = o.certified() ? o.label : -1;
      r.radius = o.radius;
      r.correct = o.certified() && o.label == data.labels[i];
      r.abstain = !o.certified();
      r.method = method;
      r.elapsed_ms = ms[i];
      rows.push_back(std::move(r));
    }
  };
  if (run_baseline) append_rows(baseline, baseline_ms, "certify");
  if (run_tcert) append_rows(tcert, tcert_ms, "tcertify");
  write_results_csv(a.out, rows);

  const json params_json = {{"method", a.method},
                            {"sigma", a.sigma},
                            {"n0", a.n0},
                            {"n", a.n},
                            {"alpha", a.alpha},
                            {"grid", params.grid},
                            {"max_samples", a.max_samples},
                            {"threads", a.threads},
                            {"independent_draws", a.independent_draws},
                            {"timing", a.timing},
                            {"samples_certified", count}};
  write_manifest(a.out, "certify", params_json, a.seed, {a.model, a.data}, {a.out},
                 watch.elapsed_ms());
  std::cout << "certified " << count << " samples -> " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string results;
  std::string out;
  std::string radii = "";
};

int run_evaluate(const EvaluateArgs& a) {
  Stopwatch watch;
  const std::vector<SampleResult> rows = read_results_csv(a.results);
  if (rows.empty()) throw UsageError("results file has no rows: " + a.results);
  const std::vector<double> radii =
      a.radii.empty() ? default_radius_grid() : parse_double_list(a.radii, "--radii");
  for (std::size_t i = 1; i < radii.size(); ++i) {
    if (radii[i] < radii[i - 1]) throw UsageError("--radii must be sorted ascending");
  }

  std::vector<std::string> methods;
  for (const auto& r : rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
      methods.push_back(r.method);
    }
  }

  std::vector<CertifiedAccuracyCurve> curves;
  for (const auto& method : methods) {
    std::vector<CertificationOutcome> outcomes;
    std::vector<int> labels;
    for (const auto& r : rows) {
      if (r.method != method) continue;
      CertificationOutcome o;
      if (!r.abstain) {
        o.status = CertStatus::kCertified;
        o.label = r.predicted;
        o.radius = r.radius;
      }
      outcomes.push_back(std::move(o));
      labels.push_back(r.true_label);
    }
    CurveMetadata meta;
    meta.method = method;
    curves.push_back(certified_accuracy(outcomes, labels, radii, meta));
  }
  write_curve_csv(a.out, curves);

  const json params = {{"radii", radii}, {"methods", methods}};
  write_manifest(a.out, "evaluate", params, 0, {a.results}, {a.out}, watch.elapsed_ms());
  std::cout << "wrote " << curves.size() << " curve(s) to " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"randomized smoothing robustness certification toolkit"};
  app.require_subcommand(1);

  GenDataArgs gen_args;
  auto* gen = app.add_subcommand("gen-data", "generate a Gaussian-blob dataset CSV");
  gen->add_option("--out", gen_args.out, "output dataset CSV")->required();
  gen->add_option("--classes", gen_args.classes, "number of classes (>= 2)");
  gen->add_option("--dim", gen_args.dim, "input dimension");
  gen->add_option("--per-class", gen_args.per_class, "examples per class");
  gen->add_option("--separation", gen_args.separation, "pairwise distance between class centers");
  gen->add_option("--seed", gen_args.seed, "master seed");

  TrainArgs train_args;
  auto* tr = app.add_subcommand("train", "train an MLP base classifier under Gaussian noise");
  tr->add_option("--data", train_args.data, "training dataset CSV")->required();
  tr->add_option("--out", train_args.out, "output model JSON")->required();
  tr->add_option("--log", train_args.log, "training log CSV (default <out>.log.csv)");
  tr->add_option("--hidden", train_args.hidden, "hidden layer sizes, comma-separated");
  tr->add_option("--sigma", train_args.sigma, "noise standard deviation");
  tr->add_option("--lambda", train_args.lambda, "regularizer weight");
  tr->add_option("--k", train_args.k, "perturbations per example");
  tr->add_option("--epochs", train_args.epochs, "training epochs");
  tr->add_option("--batch-size", train_args.batch_size, "mini-batch size");
  tr->add_option("--lr", train_args.lr, "initial learning rate");
  tr->add_option("--momentum", train_args.momentum, "SGD momentum");
  tr->add_option("--lr-decay-factor", train_args.lr_decay_factor, "LR decay multiplier");
  tr->add_option("--lr-decay-epochs", train_args.lr_decay_epochs, "epochs between LR decays");
  tr->add_option("--seed", train_args.seed, "master seed");
  tr->add_option("--adv-steps", train_args.adv_steps, "PGD attack steps (enables adversarial training)");
  tr->add_option("--adv-eps", train_args.adv_eps, "PGD l2 radius");
  tr->add_option("--adv-step-size", train_args.adv_step_size, "PGD step size (default 2*eps/steps)");
  tr->add_flag("--single-perturbation-lper", train_args.single_perturbation_lper,
               "use one random perturbation for the perturbed CE term");

  CertifyArgs cert_args;
  auto* ce = app.add_subcommand("certify", "certify test inputs with the smoothed classifier");
  ce->add_option("--model", cert_args.model, "model JSON")->required();
  ce->add_option("--data", cert_args.data, "dataset CSV")->required();
  ce->add_option("--out", cert_args.out, "output results CSV")->required();
  ce->add_option("--method", cert_args.method, "certify | tcertify | both");
  ce->add_option("--sigma", cert_args.sigma, "noise standard deviation")->required();
  ce->add_option("--n0", cert_args.n0, "selection sample count");
  ce->add_option("--n", cert_args.n, "estimation sample count");
  ce->add_option("--alpha", cert_args.alpha, "significance level");
  ce->add_option("--grid", cert_args.grid, "alpha' fractions (must include 1.0)");
  ce->add_option("--seed", cert_args.seed, "master seed");
  ce->add_option("--max-samples", cert_args.max_samples, "certify only the first N samples");
  ce->add_option("--threads", cert_args.threads, "worker threads");
  ce->add_flag("--independent-draws", cert_args.independent_draws,
               "draw separate noise per certifier instead of shared counts");
  ce->add_flag("--timing", cert_args.timing,
               "record per-sample wall time (makes output non-reproducible)");

  EvaluateArgs eval_args;
  auto* ev = app.add_subcommand("evaluate", "aggregate results into certified-accuracy curves");
  ev->add_option("--results", eval_args.results, "per-sample results CSV")->required();
  ev->add_option("--out", eval_args.out, "output curve CSV")->required();
  ev->add_option("--radii", eval_args.radii, "evaluation radii, comma-separated ascending");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) return run_gen_data(gen_args);
    if (tr->parsed()) return run_train(train_args);
    if (ce->parsed()) return run_certify(cert_args);
    if (ev->parsed()) return run_evaluate(eval_args);
    std::cerr << "error: no subcommand\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
