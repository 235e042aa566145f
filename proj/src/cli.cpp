#include "dsmlr/cli.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

#include "CLI11.hpp"
#include "dsmlr/core_math.hpp"
#include "dsmlr/data_io.hpp"
#include "dsmlr/engine_async.hpp"
#include "dsmlr/engine_sync.hpp"
#include "dsmlr/metrics.hpp"
#include "dsmlr/serial.hpp"
#include "dsmlr/synthetic.hpp"

namespace dsmlr::cli {

namespace {

const std::map<std::string, Algorithm> kAlgorithms{
    {"serial", Algorithm::Serial}, {"sync", Algorithm::Sync}, {"async", Algorithm::Async}, {"oracle", Algorithm::Oracle}};

void validate(const TrainConfig& cfg) {
  if (cfg.train_path.empty()) throw StructuralError("--train is required");
  if (cfg.workers < 1) throw StructuralError("--workers must be >= 1");
  if (cfg.iterations < 1) throw StructuralError("--iters must be >= 1");
  if (!(cfg.lambda >= 0.0)) throw StructuralError("--lambda must be >= 0");
  if (!(cfg.eta0 >= 0.0)) throw StructuralError("--eta0 must be >= 0");
  if (cfg.algorithm == Algorithm::Oracle && !(cfg.lambda > 0.0)) {
    throw StructuralError("--algo oracle needs --lambda > 0");
  }
}

ParsedDataset load_test_set(const std::string& path, const LabelMap& labels, std::size_t n_features,
                            bool zero_based, std::ostream& err) {
  ParseOptions opts;
  opts.zero_based = zero_based;
  opts.expected_features = n_features;
  opts.truncate_extra_features = true;
  opts.initial_labels = labels;
  ParsedDataset test = load_libsvm(path, opts);
  if (test.dropped_features > 0) {
    err << "warning: " << test.dropped_features << " test features beyond D=" << n_features << " ignored\n";
  }
  if (test.labels.size() > labels.size()) {
    std::size_t unknown = 0;
    for (ClassId y : test.data.labels) unknown += y >= labels.size() ? 1 : 0;
    err << "warning: " << unknown << " test rows carry labels unknown to the model; scored as rank "
        << labels.size() << "\n";
  }
  return test;
}

void report_parse_warnings(const ParsedDataset& d, const std::string& path, std::ostream& err) {
  if (d.unsorted_rows > 0) err << "warning: " << path << ": " << d.unsorted_rows << " rows had unsorted indices\n";
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const StructuralError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumericFailure;
  } catch (const IntegrityError& e) {
    err << "engine failure: " << e.what() << "\n";
    return kNumericFailure;
  }
}

void print_value(std::ostream& out, const char* name, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  out << name << ": " << buf << "\n";
}

}  // namespace

int cmd_train(const TrainConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    validate(cfg);
    ParseOptions popts;
    popts.zero_based = cfg.zero_based;
    ParsedDataset train = load_libsvm(cfg.train_path, popts);
    report_parse_warnings(train, cfg.train_path, err);
    if (train.data.size() == 0) throw DataError(cfg.train_path + ": no rows");

    std::optional<ParsedDataset> test;
    if (!cfg.test_path.empty()) {
      test = load_test_set(cfg.test_path, train.labels, train.data.n_features, cfg.zero_based, err);
    }

    Hyperparams h;
    h.lambda = cfg.lambda;
    h.eta0 = cfg.eta0;

    EngineConfig ec;
    ec.workers = cfg.workers;
    ec.iterations = cfg.iterations;
    ec.seed = cfg.seed;
    ec.hyper = h;
    ec.eval_every = test ? cfg.eval_every : 0;
    ec.check_invariants = cfg.check_invariants;
    ec.packet_size = cfg.packet_size;
    if (test) {
      const SparseDataset* td = &test->data;
      ec.evaluator = [td](const DenseWeights& W) {
        const Evaluation ev = evaluate(W, *td);
        return std::pair{ev.macro, ev.micro};
      };
    }

    Model model;
    model.labels = train.labels;
    model.lambda = cfg.lambda;
    model.n_train_rows = train.data.size();
    ProgressLog log;

    switch (cfg.algorithm) {
      case Algorithm::Oracle: {
        Stopwatch clock;
        OracleResult res = run_batch_oracle(train.data, h, OracleConfig{});
        ProgressRecord rec;
        rec.iteration = res.iterations;
        rec.objective = res.value;
        rec.seconds = clock.seconds();
        if (ec.evaluator) std::tie(rec.macro_f1, rec.micro_f1) = ec.evaluator(res.weights);
        log.push_back(rec);
        print_value(out, "certified optimum", res.value);
        print_value(out, "gradient norm", res.gradient_norm);
        out << "oracle iterations: " << res.iterations << (res.converged ? "" : " (not converged)") << "\n";
        model.weights = std::move(res.weights);
        break;
      }
      case Algorithm::Serial:
      case Algorithm::Sync:
      case Algorithm::Async: {
        TrainResult res = cfg.algorithm == Algorithm::Serial ? run_serial_dsmlr(train.data, ec)
                          : cfg.algorithm == Algorithm::Sync ? run_sync(train.data, ec)
                                                             : run_async(train.data, ec);
        log = std::move(res.log);
        model.weights = std::move(res.weights);
        break;
      }
    }

    const double final_objective = objective_l1(model.weights, train.data, h);
    print_value(out, "final objective", final_objective);
    if (test) {
      const Evaluation ev = evaluate(model.weights, test->data);
      print_value(out, "test micro F1", ev.micro);
      print_value(out, "test macro F1", ev.macro);
    }

    if (!cfg.out_progress.empty()) {
      std::ofstream pf(cfg.out_progress);
      if (!pf) throw DataError("cannot write " + cfg.out_progress);
      write_progress(pf, log);
    }
    if (!cfg.out_model.empty()) save_checkpoint(cfg.out_model, model);
    return static_cast<int>(kOk);
  });
}

int cmd_eval(const EvalConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (cfg.model_path.empty() || cfg.test_path.empty()) throw StructuralError("--model and --test are required");
    const Model model = load_checkpoint(cfg.model_path);
    const ParsedDataset test =
        load_test_set(cfg.test_path, model.labels, model.weights.n_features(), cfg.zero_based, err);
    if (test.data.size() == 0) throw DataError(cfg.test_path + ": no rows");
    const Evaluation ev = evaluate(model.weights, test.data);
    const RankCdf cdf = rank_cdf_from_ranks(ev.ranks, model.weights.n_classes());
    validate_rank_cdf(cdf);

    print_value(out, "test micro F1", ev.micro);
    print_value(out, "test macro F1", ev.macro);
    if (cfg.out_cdf.empty()) {
      write_rank_cdf(out, cdf);
    } else {
      std::ofstream cf(cfg.out_cdf);
      if (!cf) throw DataError("cannot write " + cfg.out_cdf);
      write_rank_cdf(cf, cdf);
    }
    if (!cfg.out_predictions.empty()) {
      std::ofstream pf(cfg.out_predictions);
      if (!pf) throw DataError("cannot write " + cfg.out_predictions);
      write_predictions(pf, ev, test.data.labels, test.labels.names());
    }
    return static_cast<int>(kOk);
  });
}

int cmd_synth(const SynthConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (cfg.out_path.empty()) throw StructuralError("--out is required");
    SyntheticSpec spec;
    spec.n_rows = cfg.rows;
    spec.n_features = cfg.features;
    spec.n_classes = cfg.classes;
    spec.seed = cfg.seed;
    spec.density = cfg.density;
    spec.noise = cfg.noise;
    const ParsedDataset d = make_synthetic(spec);
    std::ofstream f(cfg.out_path);
    if (!f) throw DataError("cannot write " + cfg.out_path);
    write_libsvm(f, d.data, d.labels, cfg.zero_based);
    out << "wrote " << d.data.size() << " rows to " << cfg.out_path << "\n";
    return static_cast<int>(kOk);
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Doubly-separable multinomial logistic regression"};
  app.require_subcommand(1);

  TrainConfig tc;
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint and progress log");
  train->add_option("--algo", tc.algorithm, "serial | sync | async | oracle")
      ->transform(CLI::CheckedTransformer(kAlgorithms, CLI::ignore_case))
      ->capture_default_str();
  train->add_option("--train", tc.train_path, "Training set (LIBSVM format)")->required();
  train->add_option("--test", tc.test_path, "Test set for F1 tracking (optional)");
  train->add_option("--lambda", tc.lambda, "Regularization weight")->capture_default_str();
  train->add_option("--eta0", tc.eta0, "Base step size; eta_t = eta0 / sqrt(t)")->capture_default_str();
  train->add_option("--iters", tc.iterations, "Outer iterations")->capture_default_str();
  train->add_option("--workers", tc.workers, "Worker threads")->capture_default_str();
  train->add_option("--seed", tc.seed, "Random seed")->capture_default_str();
  train->add_option("--eval-every", tc.eval_every, "Evaluate test F1 every N iterations")->capture_default_str();
  train->add_option("--out-model", tc.out_model, "Checkpoint path (empty to skip)")->capture_default_str();
  train->add_option("--out-progress", tc.out_progress, "Progress TSV path (empty to skip)")->capture_default_str();
  train->add_flag("--zero-based-indices", tc.zero_based, "Feature indices start at 0")->capture_default_str();
  train->add_option("--packet-size", tc.packet_size, "Classes per migrating packet (async)")->capture_default_str();
  train->add_flag("--check-invariants", tc.check_invariants, "Audit ownership invariants while running")
      ->capture_default_str();

  EvalConfig ev;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a test set");
  eval->add_option("--model", ev.model_path, "Checkpoint written by train")->required();
  eval->add_option("--test", ev.test_path, "Test set (LIBSVM format)")->required();
  eval->add_option("--out-cdf", ev.out_cdf, "Rank-CDF TSV path (default: stdout)");
  eval->add_option("--out-predictions", ev.out_predictions, "Write 'true predicted rank' lines here");
  eval->add_flag("--zero-based-indices", ev.zero_based, "Feature indices start at 0")->capture_default_str();

  SynthConfig sc;
  auto* synth = app.add_subcommand("synth", "Write a synthetic Gaussian-cluster dataset");
  synth->add_option("--out", sc.out_path, "Output path")->required();
  synth->add_option("--rows", sc.rows, "N")->capture_default_str();
  synth->add_option("--features", sc.features, "D")->capture_default_str();
  synth->add_option("--classes", sc.classes, "K")->capture_default_str();
  synth->add_option("--seed", sc.seed, "Random seed")->capture_default_str();
  synth->add_option("--density", sc.density, "Fraction of stored coordinates")->capture_default_str();
  synth->add_option("--noise", sc.noise, "Cluster noise standard deviation")->capture_default_str();
  synth->add_flag("--zero-based-indices", sc.zero_based, "Write 0-based indices")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? static_cast<int>(kOk) : static_cast<int>(kUsage);
  }

  if (*train) return cmd_train(tc, out, err);
  if (*eval) return cmd_eval(ev, out, err);
  return cmd_synth(sc, out, err);
}

}  // namespace dsmlr::cli
