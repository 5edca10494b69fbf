#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <charconv>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gdgp/bench.hpp"
#include "gdgp/inference.hpp"
#include "gdgp/io.hpp"
#include "gdgp/model.hpp"
#include "gdgp/parallel.hpp"
#include "gdgp/predict.hpp"
#include "gdgp/rng.hpp"

namespace {

using namespace gdgp;

// Exit codes: 0 success, 2 command line or configuration invalid, 3 input
// data (CSV or archive) malformed or inconsistent, 4 numerical failure.
constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kData = 3;
constexpr int kNumeric = 4;

constexpr const char* kSeedEnv = "GDGP_SEED";

// Default seed from the environment; flags and config files override it.
bool seed_from_env(std::uint64_t* out) {
  const char* text = std::getenv(kSeedEnv);
  if (text == nullptr || *text == '\0') return false;
  const char* end = text + std::strlen(text);
  const auto [ptr, ec] = std::from_chars(text, end, *out);
  if (ec != std::errc() || ptr != end)
    throw DataError(std::string(kSeedEnv) + " must be a non-negative integer, got '" +
                    text + "'");
  return true;
}

struct TrainArgs {
  std::string config_path, data_path, out_path, trace_path;
  RunConfig flags;
  CLI::App* cmd = nullptr;

  bool seen(const std::string& name) const { return cmd->count(name) > 0; }
};

struct PredictArgs {
  std::string model_path, data_path, out_path;
  int draws = 256;
  std::uint64_t seed = 0;
  int threads = 0;
  CLI::App* cmd = nullptr;
};

struct ValidateArgs {
  std::string pred_path, truth_path, out_path;
  std::vector<std::string> metrics;
};

struct SimulateArgs {
  std::string simulator, design = "lhs", out_path;
  int n = 0;
  int reps = 1;
  int reps_min = 0, reps_max = 0;
  std::uint64_t seed = 0;
  CLI::App* cmd = nullptr;
};

// Layered effective configuration: built-in defaults, then the environment
// seed, then the config file, then explicitly passed flags.
RunConfig effective_config(const TrainArgs& args) {
  RunConfig cfg;
  std::uint64_t env_seed = 0;
  if (seed_from_env(&env_seed)) cfg.seed = env_seed;
  if (!args.config_path.empty())
    cfg = RunConfig::from_json_file_over(args.config_path, cfg);
  if (args.seen("--likelihood")) cfg.likelihood = args.flags.likelihood;
  if (args.seen("--classes")) cfg.classes = args.flags.classes;
  if (args.seen("--hidden-nodes")) cfg.hidden_nodes = args.flags.hidden_nodes;
  if (args.seen("--kernel")) cfg.kernel = args.flags.kernel;
  if (args.seen("--sem-iters")) cfg.sem_iters = args.flags.sem_iters;
  if (args.seen("--burnin")) cfg.burnin = args.flags.burnin;
  if (args.seen("--ess-steps")) cfg.ess_steps = args.flags.ess_steps;
  if (args.seen("--imputations")) cfg.imputations = args.flags.imputations;
  if (args.seen("--thin")) cfg.thin = args.flags.thin;
  if (args.seen("--seed")) cfg.seed = args.flags.seed;
  if (args.seen("--vecchia")) cfg.vecchia = args.flags.vecchia;
  if (args.seen("--m-train")) cfg.m_train = args.flags.m_train;
  if (args.seen("--m-pred")) cfg.m_pred = args.flags.m_pred;
  if (args.seen("--mu-dense-threshold"))
    cfg.mu_dense_threshold = args.flags.mu_dense_threshold;
  if (args.seen("--threads")) cfg.threads = args.flags.threads;
  cfg.validate();
  return cfg;
}

int run_train(const TrainArgs& args) {
  RunConfig cfg;
  try {
    cfg = effective_config(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  if (cfg.threads > 0) set_max_threads(cfg.threads);

  Dataset data;
  try {
    const CsvTable table = read_csv(args.data_path);
    Mat x;
    Vec y;
    split_xy(table, &x, &y);
    data = ingest(x, y);
    data.validate(LikelihoodSpec::from_name(cfg.likelihood, cfg.classes));
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(args.data_path + ": " + e.what());
  }

  const Architecture arch = cfg.architecture(data.dim());
  SemTrace trace;
  InferenceDiagnostics diag;
  const GdgpModel model =
      sem_train(data, arch, cfg.sem(), cfg.vecchia_config(), &trace, &diag);

  save_model(args.out_path, model, cfg);

  const std::string trace_path =
      args.trace_path.empty() ? args.out_path + ".trace.csv" : args.trace_path;
  std::vector<std::string> columns = {"iteration", "loglik"};
  columns.insert(columns.end(), trace.names.begin(), trace.names.end());
  Mat rows(trace.values.rows(), trace.values.cols() + 2);
  for (Eigen::Index t = 0; t < trace.values.rows(); ++t)
    rows(t, 0) = static_cast<double>(t + 1);
  rows.col(1) = trace.loglik;
  rows.rightCols(trace.values.cols()) = trace.values;
  write_csv(trace_path, columns, rows);

  for (const std::string& warning : diag.warnings)
    std::cerr << "warning: " << warning << "\n";
  std::cout << "trained " << cfg.likelihood << " model: " << data.n()
            << " unique locations (" << data.total_obs() << " rows), "
            << model.imputations.size() << " imputations\n"
            << "archive: " << args.out_path << "\n"
            << "trace:   " << trace_path << "\n";
  return kOk;
}

int run_predict(const PredictArgs& args) {
  RunConfig model_cfg;
  const GdgpModel model = load_model(args.model_path, &model_cfg);

  Mat x;
  try {
    x = input_matrix(read_csv(args.data_path));
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(args.data_path + ": " + e.what());
  }
  if (x.cols() != model.scaling.x_min.size())
    throw DataError(args.data_path + ": test inputs have " + std::to_string(x.cols()) +
                    " columns but the model was trained on " +
                    std::to_string(model.scaling.x_min.size()));

  if (args.threads > 0) set_max_threads(args.threads);
  std::uint64_t seed = model_cfg.seed;
  try {
    std::uint64_t env_seed = 0;
    if (seed_from_env(&env_seed)) seed = env_seed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  if (args.cmd->count("--seed") > 0) seed = args.seed;

  PredictDiagnostics diag;
  if (model.arch.likelihood.id == LikelihoodId::Categorical) {
    SampleOptions opts;
    opts.draws_per_imputation = args.draws;
    opts.seed = seed;
    const SampleSet samples = predict_samples(model, x, opts, &diag);
    std::vector<std::string> columns;
    for (Eigen::Index c = 0; c < samples.class_probs.cols(); ++c)
      columns.push_back("p_class_" + std::to_string(c + 1));
    write_csv(args.out_path, columns, samples.class_probs);
  } else {
    const Prediction pred = predict_moments(model, x, &diag);
    Mat out(pred.mean.size(), 2);
    out.col(0) = pred.mean;
    out.col(1) = pred.variance;
    write_csv(args.out_path, {"mean", "variance"}, out);
  }
  if (diag.variance_clamps > 0)
    std::cerr << "note: " << diag.variance_clamps
              << " propagated variances were clamped to zero (round-off)\n";
  std::cout << "predicted " << x.rows() << " points -> " << args.out_path << "\n";
  return kOk;
}

// Prediction probability columns p_class_1..C, in order.
Mat class_prob_columns(const CsvTable& pred) {
  int classes = 0;
  while (pred.find("p_class_" + std::to_string(classes + 1)) >= 0) ++classes;
  if (classes < 2)
    throw DataError("prediction file lacks p_class_1..C columns needed by this metric");
  Mat probs(pred.rows(), classes);
  for (int c = 0; c < classes; ++c)
    probs.col(c) = pred.values.col(pred.require("p_class_" + std::to_string(c + 1)));
  return probs;
}

std::vector<int> integer_labels(Eigen::Ref<const Vec> y) {
  std::vector<int> labels(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double rounded = std::round(y[i]);
    if (std::fabs(y[i] - rounded) > 1e-9)
      throw DataError("class labels must be integers, got " + format_double(y[i]));
    labels[static_cast<std::size_t>(i)] = static_cast<int>(rounded);
  }
  return labels;
}

int run_validate(const ValidateArgs& args) {
  if (args.metrics.empty()) {
    std::cerr << "error: --metrics must list at least one metric\n";
    return kUsage;
  }
  const std::vector<std::string> known = {"nrmse", "ncrps", "score", "accuracy",
                                          "logloss"};
  for (const std::string& metric : args.metrics) {
    if (std::find(known.begin(), known.end(), metric) == known.end()) {
      std::cerr << "error: unknown metric '" << metric
                << "' (valid: nrmse, ncrps, score, accuracy, logloss)\n";
      return kUsage;
    }
  }

  const CsvTable pred = read_csv(args.pred_path);
  const CsvTable truth = read_csv(args.truth_path);
  if (pred.rows() != truth.rows())
    throw DataError("row counts differ: " + args.pred_path + " has " +
                    std::to_string(pred.rows()) + ", " + args.truth_path + " has " +
                    std::to_string(truth.rows()));
  const Vec y = truth.values.col(truth.require("y"));

  Mat table(static_cast<Eigen::Index>(args.metrics.size()), 1);
  try {
    for (std::size_t m = 0; m < args.metrics.size(); ++m) {
      const std::string& metric = args.metrics[m];
      double value = 0.0;
      if (metric == "nrmse") {
        value = nrmse(y, pred.values.col(pred.require("mean")));
      } else if (metric == "ncrps") {
        value = ncrps(y, pred.values.col(pred.require("mean")),
                      pred.values.col(pred.require("variance")));
      } else if (metric == "score") {
        value = score(y, pred.values.col(pred.require("mean")),
                      pred.values.col(pred.require("variance")));
      } else if (metric == "accuracy") {
        value = accuracy(integer_labels(y), class_prob_columns(pred));
      } else {
        value = logloss(integer_labels(y), class_prob_columns(pred));
      }
      table(static_cast<Eigen::Index>(m), 0) = value;
    }
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }

  std::cout << "metric      value\n";
  for (std::size_t m = 0; m < args.metrics.size(); ++m) {
    std::string name = args.metrics[m];
    name.resize(12, ' ');
    std::cout << name << format_double(table(static_cast<Eigen::Index>(m), 0)) << "\n";
  }
  std::string csv = "metric,value\n";
  for (std::size_t m = 0; m < args.metrics.size(); ++m)
    csv += args.metrics[m] + "," + format_double(table(static_cast<Eigen::Index>(m), 0)) +
           "\n";
  if (args.out_path.empty()) {
    std::cout << "\n" << csv;
  } else {
    write_text_file(args.out_path, csv);
    std::cout << "metrics csv: " << args.out_path << "\n";
  }
  return kOk;
}

int run_simulate(const SimulateArgs& args) {
  SimulatorSpec sim;
  std::uint64_t seed = 0;
  try {
    seed_from_env(&seed);
    sim = SimulatorSpec::from_name(args.simulator);
    if (args.design != "lhs" && args.design != "grid")
      throw std::invalid_argument("--design must be 'lhs' or 'grid'");
    if (args.n < 1) throw std::invalid_argument("--n must be >= 1");
    const bool ranged = args.cmd->count("--reps-min") + args.cmd->count("--reps-max") > 0;
    if (ranged && (args.cmd->count("--reps-min") == 0 || args.cmd->count("--reps-max") == 0))
      throw std::invalid_argument("--reps-min and --reps-max must be given together");
    if (ranged && (args.reps_min < 1 || args.reps_max < args.reps_min))
      throw std::invalid_argument("need 1 <= --reps-min <= --reps-max");
    if (!ranged && args.reps < 1) throw std::invalid_argument("--reps must be >= 1");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }

  if (args.cmd->count("--seed") > 0) seed = args.seed;

  Mat unit;
  try {
    if (args.design == "grid") {
      unit = uniform_grid(args.n, sim.dim());
    } else {
      Rng design_rng = Rng::stream(seed, {1});
      unit = latin_hypercube(args.n, sim.dim(), design_rng);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  Mat design(args.n, sim.dim());
  for (int d = 0; d < sim.dim(); ++d)
    design.col(d) =
        (unit.col(d).array() * (sim.bounds(d, 1) - sim.bounds(d, 0)) + sim.bounds(d, 0))
            .matrix();

  const bool ranged = args.cmd->count("--reps-min") > 0;
  std::vector<int> counts(static_cast<std::size_t>(args.n), args.reps);
  if (ranged) {
    for (int i = 0; i < args.n; ++i) {
      Rng rng = Rng::stream(seed, {2, static_cast<std::uint64_t>(i)});
      counts[static_cast<std::size_t>(i)] =
          args.reps_min +
          static_cast<int>(rng.uniform_int(
              static_cast<std::uint64_t>(args.reps_max - args.reps_min + 1)));
    }
  }

  long total = 0;
  for (int c : counts) total += c;
  Mat rows(total, sim.dim() + 1);
  long at = 0;
  for (int i = 0; i < args.n; ++i) {
    for (int s = 0; s < counts[static_cast<std::size_t>(i)]; ++s) {
      Rng rng = Rng::stream(
          seed, {3, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(s)});
      rows.block(at, 0, 1, sim.dim()) = design.row(i);
      rows(at, sim.dim()) = sim.evaluate(design.row(i).transpose(), rng);
      ++at;
    }
  }
  std::vector<std::string> columns;
  for (int d = 1; d <= sim.dim(); ++d) columns.push_back("x" + std::to_string(d));
  columns.push_back("y");
  write_csv(args.out_path, columns, rows);
  std::cout << "simulated " << total << " rows (" << args.n << " locations) -> "
            << args.out_path << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep Gaussian process emulator with parametric likelihoods"};
  app.require_subcommand(1);

  TrainArgs train;
  CLI::App* train_cmd =
      app.add_subcommand("train", "Fit a model on a training CSV (columns x1..xD,y)");
  train.cmd = train_cmd;
  train_cmd->add_option("--config", train.config_path, "JSON run configuration");
  train_cmd->add_option("--data", train.data_path, "training CSV")->required();
  train_cmd->add_option("--out", train.out_path, "model archive to write")->required();
  train_cmd->add_option("--trace", train.trace_path,
                        "trace CSV (default: <out>.trace.csv)");
  train_cmd->add_option("--likelihood", train.flags.likelihood,
                        "hetgauss|poisson|exponential|gamma|negbin|zip|zinb|categorical");
  train_cmd->add_option("--classes", train.flags.classes, "class count (categorical)");
  train_cmd->add_option("--hidden-nodes", train.flags.hidden_nodes,
                        "hidden-layer width (0 = input dimension)");
  train_cmd->add_option("--kernel", train.flags.kernel, "matern25|se");
  train_cmd->add_option("--sem-iters", train.flags.sem_iters, "EM iterations");
  train_cmd->add_option("--burnin", train.flags.burnin, "discarded initial estimates");
  train_cmd->add_option("--ess-steps", train.flags.ess_steps, "Gibbs sweeps per iteration");
  train_cmd->add_option("--imputations", train.flags.imputations, "stored imputations");
  train_cmd->add_option("--thin", train.flags.thin, "sweeps between imputations");
  train_cmd->add_option("--seed", train.flags.seed, "master seed");
  train_cmd->add_flag("--vecchia", train.flags.vecchia, "nearest-neighbor approximation");
  train_cmd->add_option("--m-train", train.flags.m_train, "training conditioning-set size");
  train_cmd->add_option("--m-pred", train.flags.m_pred, "prediction conditioning-set size");
  train_cmd->add_option("--mu-dense-threshold", train.flags.mu_dense_threshold,
                        "below this N the exact mean update is used even with --vecchia");
  train_cmd->add_option("--threads", train.flags.threads, "worker cap (0 = hardware)");

  PredictArgs predict;
  CLI::App* predict_cmd =
      app.add_subcommand("predict", "Predict at the points of a test CSV (columns x1..xD)");
  predict.cmd = predict_cmd;
  predict_cmd->add_option("--model", predict.model_path, "model archive")->required();
  predict_cmd->add_option("--data", predict.data_path, "test CSV")->required();
  predict_cmd->add_option("--out", predict.out_path, "predictions CSV to write")->required();
  predict_cmd->add_option("--draws", predict.draws,
                          "samples per imputation (categorical)")
      ->check(CLI::PositiveNumber);
  predict_cmd->add_option("--seed", predict.seed, "sampling seed (default: archive seed)");
  predict_cmd->add_option("--threads", predict.threads, "worker cap (0 = hardware)");

  ValidateArgs validate;
  CLI::App* validate_cmd =
      app.add_subcommand("validate", "Score a predictions CSV against a truth CSV");
  validate_cmd->add_option("--pred", validate.pred_path, "predictions CSV")->required();
  validate_cmd->add_option("--truth", validate.truth_path, "truth CSV (column y)")
      ->required();
  validate_cmd
      ->add_option("--metrics", validate.metrics,
                   "comma-separated list: nrmse,ncrps,score,accuracy,logloss")
      ->required()
      ->delimiter(',');
  validate_cmd->add_option("--out", validate.out_path, "machine-readable metrics CSV");

  SimulateArgs simulate;
  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "Draw a design + replicates dataset from a simulator");
  simulate.cmd = simulate_cmd;
  simulate_cmd->add_option("--simulator", simulate.simulator,
                           "step1d|sir5d|predprey4d")
      ->required();
  simulate_cmd->add_option("--design", simulate.design, "lhs|grid (default lhs)");
  simulate_cmd->add_option("--n", simulate.n, "design size")->required();
  simulate_cmd->add_option("--reps", simulate.reps, "fixed replicates per location");
  simulate_cmd->add_option("--reps-min", simulate.reps_min, "random replicate range low");
  simulate_cmd->add_option("--reps-max", simulate.reps_max, "random replicate range high");
  simulate_cmd->add_option("--seed", simulate.seed, "master seed");
  simulate_cmd->add_option("--out", simulate.out_path, "dataset CSV to write")->required();
  simulate_cmd->get_option("--reps")->excludes("--reps-min")->excludes("--reps-max");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*train_cmd) return run_train(train);
    if (*predict_cmd) return run_predict(predict);
    if (*validate_cmd) return run_validate(validate);
    return run_simulate(simulate);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
}
