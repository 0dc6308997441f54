#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "plft/cascade.hpp"
#include "plft/error.hpp"
#include "plft/eval_metrics.hpp"
#include "plft/seed.hpp"
#include "plft/synth_gen.hpp"
#include "plft/tensor_store.hpp"

namespace plft::cli {

namespace fs = std::filesystem;

namespace {

// Split stream index; layers use (seed, n >= 1, 0..2).
constexpr std::uint64_t kSplitStream = 3;

struct TrainOptions {
  std::string data;
  std::vector<std::size_t> dims;
  std::size_t rank = 20;
  std::size_t layers = 10;
  TrainConfig train;
  std::uint64_t seed = 0;
  std::vector<double> split_ratios{0.8, 0.1, 0.1};
  bool warm_start = false;
  bool use_best_layer = false;
  std::string out_dir = "plft_run";
};

struct SynthOptions {
  std::vector<std::size_t> dims;
  std::size_t rank = 5;
  double density = 0.03;
  double noise = 0.0;
  std::vector<double> range{1.0, 5.0};
  std::uint64_t seed = 0;
  std::string out;
  std::string truth;
};

struct GradcheckOptions {
  std::size_t instances = 20;
  std::uint64_t seed = 0;
  double h = 1e-5;
  bool flip_sign = false;
};

struct EvalOptions {
  std::string factors;
  std::string holdout;
  std::vector<std::string> wilcoxon;
};

TensorDims to_dims(const std::vector<std::size_t>& v) {
  TensorDims d{v.at(0), v.at(1), v.at(2)};
  d.validate();
  return d;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

nlohmann::ordered_json train_config_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["eta"] = c.eta;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["tau"] = c.tau;
  j["lambda"] = c.lambda;
  j["alpha"] = c.alpha;
  j["max_epochs"] = c.max_epochs;
  j["tol"] = c.tol;
  j["nonneg"] = c.nonneg;
  return j;
}

CascadeConfig make_cascade_config(const TrainOptions& opt) {
  CascadeConfig cfg;
  cfg.n_layers = opt.layers;
  cfg.rank = opt.rank;
  cfg.train = opt.train;
  cfg.warm_start = opt.warm_start;
  cfg.seed = opt.seed;
  cfg.validate();
  return cfg;
}

SynthSpec make_synth_spec(const SynthOptions& opt) {
  SynthSpec spec;
  spec.dims = to_dims(opt.dims);
  spec.true_rank = opt.rank;
  spec.density = opt.density;
  spec.noise_sigma = opt.noise;
  spec.value_low = opt.range.at(0);
  spec.value_high = opt.range.at(1);
  spec.seed = opt.seed;
  spec.validate();
  return spec;
}

int cmd_train(const TrainOptions& opt, std::ostream& out) {
  const TensorDims dims = to_dims(opt.dims);
  const CascadeConfig cfg = make_cascade_config(opt);

  const SparseTensor data = load_coo(opt.data, dims);
  const std::array<double, 3> ratios{opt.split_ratios[0], opt.split_ratios[1], opt.split_ratios[2]};
  const DatasetSplit parts = split(data, ratios, derive_seed(opt.seed, 0, kSplitStream));

  const fs::path dir = opt.out_dir;
  fs::create_directories(dir);
  auto epochs_csv = open_output(dir / "epochs.csv");
  epochs_csv << "layer,epoch,train_rmse\n";
  const CascadeResult result =
      run_cascade(cfg, parts, [&](std::size_t layer, std::size_t epoch, double rmse) {
        fmt::print(epochs_csv, "{},{},{}\n", layer, epoch, rmse);
      });
  epochs_csv.close();

  auto layers_csv = open_output(dir / "layers.csv");
  layers_csv << "layer,omega_size,val_rmse,val_mae,epochs_to_converge\n";
  for (const auto& rec : result.per_layer) {
    std::string val_rmse, val_mae;
    if (rec.validation) {
      val_rmse = fmt::format("{}", rec.validation->rmse);
      val_mae = fmt::format("{}", rec.validation->mae);
    }
    fmt::print(layers_csv, "{},{},{},{},{}\n", rec.layer, rec.omega_size, val_rmse, val_mae,
               rec.result.epochs_run);
  }
  layers_csv.close();

  const std::size_t chosen = opt.use_best_layer ? result.best_layer : cfg.n_layers;
  const FactorMatrices& factors = result.layer(chosen).result.factors;
  save_factors(dir / "factors.txt", factors);

  auto test_csv = open_output(dir / "test_metrics.csv");
  test_csv << "layer,test_rmse,test_mae,n\n";
  if (!parts.test.empty()) {
    const MetricPair test = evaluate(factors, parts.test);
    fmt::print(test_csv, "{},{},{},{}\n", chosen, test.rmse, test.mae, test.n);
    fmt::print(out, "layer={} test_rmse={} test_mae={} n={}\n", chosen, test.rmse, test.mae, test.n);
  } else {
    fmt::print(out, "layer={} (no test entries)\n", chosen);
  }
  test_csv.close();

  nlohmann::ordered_json manifest;
  manifest["tool"] = "plft";
  manifest["version"] = kToolVersion;
  manifest["command"] = "train";
  manifest["seed"] = opt.seed;
  manifest["dims"] = opt.dims;
  manifest["rank"] = cfg.rank;
  manifest["layers"] = cfg.n_layers;
  manifest["split"] = opt.split_ratios;
  manifest["warm_start"] = cfg.warm_start;
  manifest["use_best_layer"] = opt.use_best_layer;
  manifest["train"] = train_config_json(cfg.train);
  manifest["inputs"] = {{"data", opt.data}};
  manifest["outputs"] = {{"epochs", "epochs.csv"},
                         {"layers", "layers.csv"},
                         {"test_metrics", "test_metrics.csv"},
                         {"factors", "factors.txt"}};
  manifest["split_sizes"] = {parts.train.size(), parts.validation.size(), parts.test.size()};
  manifest["best_layer"] = result.best_layer;
  manifest["reported_layer"] = chosen;
  auto manifest_file = open_output(dir / "manifest.json");
  manifest_file << manifest.dump(2) << '\n';
  return kExitOk;
}

int cmd_synth(const SynthOptions& opt, std::ostream& out) {
  const SynthSpec spec = make_synth_spec(opt);
  const SynthTensor synth = generate(spec);
  save_coo(opt.out, synth.observed.entries());
  const std::string truth = opt.truth.empty() ? opt.out + ".factors" : opt.truth;
  save_factors(truth, synth.ground_truth);
  fmt::print(out, "wrote {} entries to {} (ground truth: {})\n", synth.observed.size(), opt.out,
             truth);
  return kExitOk;
}

int cmd_gradcheck(const GradcheckOptions& opt, std::ostream& out) {
  GradientFn gradient = entry_gradients;
  if (opt.flip_sign) {
    gradient = [](const FactorMatrices& f, const Entry& e, const LossParams& p) {
      auto g = entry_gradients(f, e, p);
      for (auto* v : {&g.u, &g.s, &g.t}) {
        for (double& x : *v) x = -x;
      }
      return g;
    };
  }
  const GradcheckReport report = run_gradcheck(opt.instances, opt.seed, opt.h, gradient);
  const bool ok = report.max_rel_error < kGradcheckThreshold;
  fmt::print(out, "instances={} max_rel_error={:.3e} threshold={:g} {}\n", report.instances,
             report.max_rel_error, kGradcheckThreshold, ok ? "PASS" : "FAIL");
  return ok ? kExitOk : kExitFailure;
}

std::vector<double> read_numbers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path));
  std::vector<double> values;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || !std::isfinite(v)) {
      throw DataError(fmt::format("{}: '{}' is not a finite real", path, tok));
    }
    values.push_back(v);
  }
  return values;
}

int cmd_eval(const EvalOptions& opt, std::ostream& out) {
  if (!opt.wilcoxon.empty()) {
    const auto a = read_numbers(opt.wilcoxon[0]);
    const auto b = read_numbers(opt.wilcoxon[1]);
    if (a.size() != b.size()) {
      throw DataError(fmt::format("paired lists differ in length ({} vs {})", a.size(), b.size()));
    }
    const WilcoxonReport r = wilcoxon_signed_rank(a, b);
    fmt::print(out, "w+={} w-={} p={}\n", r.w_plus, r.w_minus, r.p_value);
    return kExitOk;
  }
  const FactorMatrices factors = load_factors(opt.factors);
  const SparseTensor holdout = load_coo(opt.holdout, factors.dims());
  if (holdout.empty()) throw DataError(fmt::format("holdout '{}' has no entries", opt.holdout));
  const MetricPair m = evaluate(factors, holdout.entries());
  fmt::print(out, "rmse={} mae={} n={}\n", m.rmse, m.mae, m.n);
  return kExitOk;
}

}  // namespace

GradcheckReport run_gradcheck(std::size_t instances, std::uint64_t seed, double h,
                              const GradientFn& gradient) {
  GradcheckReport report;
  report.instances = instances;
  for (std::size_t n = 0; n < instances; ++n) {
    std::mt19937_64 rng(derive_seed(seed, n));
    auto uniform_int = [&](std::size_t lo, std::size_t hi) {
      return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    const TensorDims dims{uniform_int(1, 6), uniform_int(1, 6), uniform_int(1, 3)};
    const std::size_t rank = uniform_int(1, 4);
    FactorMatrices f(dims, rank);
    for (Matrix* m : {&f.u, &f.s, &f.t}) {
      for (double& x : m->data()) x = unit(rng);
    }
    const LossParams params{n % 2 == 0 ? 0.0 : 0.01, (n / 2) % 2 == 0 ? 1.0 : 1.5};
    const Entry e{static_cast<Index>(uniform_int(0, dims.i_size - 1)),
                  static_cast<Index>(uniform_int(0, dims.j_size - 1)),
                  static_cast<Index>(uniform_int(0, dims.k_size - 1)), 2.0 * unit(rng),
                  (n / 4) % 2 == 0 ? Origin::Known : Origin::Synthetic};

    const EntryGradients analytic = gradient(f, e, params);
    const EntryGradients numeric = finite_diff_gradient(f, e, params, h);
    auto compare = [&](const std::vector<double>& a, const std::vector<double>& b) {
      for (std::size_t r = 0; r < a.size(); ++r) {
        const double denom = std::max({std::abs(a[r]), std::abs(b[r]), 1e-6});
        report.max_rel_error = std::max(report.max_rel_error, std::abs(a[r] - b[r]) / denom);
      }
    };
    compare(analytic.u, numeric.u);
    compare(analytic.s, numeric.s);
    compare(analytic.t, numeric.t);
  }
  return report;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Prediction-sampling cascade tensor factorization", "plft"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Split a COO tensor, run the cascade, report metrics");
  train_cmd->add_option("--data", train.data, "COO input file")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--dims", train.dims, "Tensor dims I,J,K")
      ->required()->delimiter(',')->expected(3)->check(CLI::PositiveNumber);
  train_cmd->add_option("--rank", train.rank, "Latent rank R")->capture_default_str()
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--layers", train.layers, "Cascade depth N")->capture_default_str()
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--alpha", train.train.alpha, "Synthetic-entry loss weight")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--lambda", train.train.lambda, "Regularization coefficient")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--eta", train.train.eta, "Adam learning rate")->capture_default_str()
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--beta1", train.train.beta1)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--beta2", train.train.beta2)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--tau", train.train.tau)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--epochs", train.train.max_epochs, "Epoch cap per layer")
      ->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--tol", train.train.tol, "Training-RMSE convergence tolerance")
      ->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", train.seed, "Seed for split, init, shuffling and sampling")->required();
  train_cmd->add_option("--split", train.split_ratios, "Train,validation,test ratios")
      ->delimiter(',')->expected(3)->capture_default_str()->check(CLI::NonNegativeNumber);
  train_cmd->add_flag("--nonneg", train.train.nonneg, "Clamp factors at zero after each update");
  train_cmd->add_flag("--warm-start", train.warm_start, "Start each layer from the previous factors");
  train_cmd->add_flag("--use-best-layer", train.use_best_layer,
                      "Report and save the layer with the lowest validation RMSE");
  train_cmd->add_option("--out-dir", train.out_dir, "Output directory")->capture_default_str();

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic low-rank sparse tensor");
  synth_cmd->add_option("--dims", synth.dims, "Tensor dims I,J,K")
      ->required()->delimiter(',')->expected(3)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--rank", synth.rank, "Ground-truth rank")->capture_default_str()
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--density", synth.density, "Observed fraction of cells")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--noise", synth.noise, "Gaussian noise deviation")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--range", synth.range, "Noiseless value range low,high")
      ->delimiter(',')->expected(2)->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->required();
  synth_cmd->add_option("--out", synth.out, "Output COO file")->required();
  synth_cmd->add_option("--truth", synth.truth, "Ground-truth factor file (default <out>.factors)");

  GradcheckOptions grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Check analytic gradients against finite differences");
  grad_cmd->add_option("--instances", grad.instances)->capture_default_str()->check(CLI::PositiveNumber);
  grad_cmd->add_option("--seed", grad.seed)->required();
  grad_cmd->add_option("--step", grad.h, "Central-difference step h")->capture_default_str()
      ->check(CLI::PositiveNumber);
  // Mutation fixture: negates the analytic gradient so the check must fail.
  grad_cmd->add_flag("--flip-sign-fixture", grad.flip_sign)->group("");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Holdout RMSE/MAE, or a paired Wilcoxon signed-rank test");
  auto* factors_opt = eval_cmd->add_option("--factors", eval.factors, "Factor file")
                          ->check(CLI::ExistingFile);
  auto* holdout_opt = eval_cmd->add_option("--holdout", eval.holdout, "Holdout COO file")
                          ->check(CLI::ExistingFile);
  auto* wilcoxon_opt =
      eval_cmd->add_option("--wilcoxon", eval.wilcoxon, "Two files of paired error values")
          ->expected(2)->check(CLI::ExistingFile);
  factors_opt->needs(holdout_opt);
  holdout_opt->needs(factors_opt);
  wilcoxon_opt->excludes(factors_opt)->excludes(holdout_opt);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (eval_cmd->parsed() && eval.wilcoxon.empty() && eval.factors.empty()) {
      throw CLI::ValidationError("eval needs --factors with --holdout, or --wilcoxon A B");
    }
    if (train_cmd->parsed()) {
      const double sum = train.split_ratios[0] + train.split_ratios[1] + train.split_ratios[2];
      if (std::abs(sum - 1.0) > 1e-9) throw CLI::ValidationError("--split ratios must sum to 1");
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  // Argument-level validation; failures here are usage errors.
  try {
    if (train_cmd->parsed()) {
      to_dims(train.dims);
      make_cascade_config(train);
    }
    if (synth_cmd->parsed()) make_synth_spec(synth);
  } catch (const InvalidArgument& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train, out);
    if (synth_cmd->parsed()) return cmd_synth(synth, out);
    if (grad_cmd->parsed()) return cmd_gradcheck(grad, out);
    return cmd_eval(eval, out);
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitFailure;
  }
}

}  // namespace plft::cli
