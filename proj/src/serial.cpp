#include "dsmlr/serial.hpp"

#include <cmath>
#include <string>
#include <tuple>

#include "dsmlr/core_math.hpp"
#include "dsmlr/kernels.hpp"

namespace dsmlr {

void OracleConfig::validate() const {
  if (!(tolerance > 0.0)) throw StructuralError("oracle tolerance must be > 0");
  if (!(shrink > 0.0 && shrink < 1.0)) throw StructuralError("oracle shrink must lie in (0, 1)");
  if (!(initial_step > 0.0)) throw StructuralError("oracle initial step must be > 0");
  if (max_iterations == 0) throw StructuralError("oracle needs max_iterations >= 1");
}

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

OracleResult run_batch_oracle(const SparseDataset& data, const Hyperparams& h, const OracleConfig& cfg,
                              const std::optional<DenseWeights>& init) {
  cfg.validate();
  data.validate();
  if (!(h.lambda > 0.0)) throw StructuralError("oracle requires lambda > 0 for a unique optimum");

  OracleResult res;
  res.weights = init.value_or(DenseWeights(data.n_classes, data.n_features));
  if (res.weights.n_classes() != data.n_classes || res.weights.n_features() < data.n_features) {
    throw StructuralError("oracle: initial weights do not match the data");
  }
  double f = objective_l1(res.weights, data, h);
  double step = cfg.initial_step;
  DenseWeights trial = res.weights;

  for (res.iterations = 0; res.iterations < cfg.max_iterations; ++res.iterations) {
    const DenseWeights g = kernels::full_gradient(res.weights, data, h.lambda);
    const double gnorm = norm(g.flat());
    res.gradient_norm = gnorm;
    if (gnorm <= cfg.tolerance) {
      res.converged = true;
      break;
    }
    // Let the step grow back after earlier shrinks.
    step *= 2.0;
    double f_trial = 0.0;
    while (true) {
      auto w = res.weights.flat();
      auto gw = g.flat();
      auto tw = trial.flat();
      for (std::size_t j = 0; j < w.size(); ++j) tw[j] = w[j] - step * gw[j];
      f_trial = objective_l1(trial, data, h);
      if (f_trial <= f - cfg.armijo * step * gnorm * gnorm) break;
      step *= cfg.shrink;
      if (step < 1e-20) {
        // No representable decrease left; the iterate is as good as it gets.
        res.value = f;
        return res;
      }
    }
    std::swap(res.weights, trial);
    f = f_trial;
  }
  res.value = f;
  return res;
}

TrainResult run_serial_dsmlr(const SparseDataset& data, const EngineConfig& cfg) {
  EngineConfig one = cfg;
  one.workers = 1;
  validate_engine_input(data, one);

  const std::size_t N = data.size();
  const std::size_t K = data.n_classes;
  const Hyperparams& h = cfg.hyper;
  TrainResult out;
  out.weights = DenseWeights(K, data.n_features);
  out.b.assign(N, -std::log(static_cast<double>(K)));
  out.stats.max_resident_vectors = K;
  const RowRange all{0, N};

  Stopwatch clock;
  for (std::size_t t = 1; t <= cfg.iterations; ++t) {
    const double step = h.step(t) * static_cast<double>(K);
    for (ClassId k = 0; k < K; ++k) {
      const auto order = shuffled_rows(all, cfg.seed, 0, t, k);
      try {
        sgd_pass(out.weights.row(k), k, order, data, out.b, step, h.lambda);
      } catch (const NumericError& e) {
        throw NumericError("serial iteration " + std::to_string(t) + ", class " + std::to_string(k) + ": " +
                           e.what());
      }
      ++out.stats.token_processings;
      if (cfg.recorder) {
        const auto w = out.weights.row(k);
        cfg.recorder->record({0, t, k, t, std::vector<double>(w.begin(), w.end())});
      }
    }
    for (std::size_t i = 0; i < N; ++i) {
      LogSumExp acc;
      for (ClassId k = 0; k < K; ++k) acc.add(sparse_dot(out.weights.row(k), data.rows[i]));
      out.b[i] = refresh_b(acc);
    }
    clock.pause();
    ProgressRecord rec;
    rec.iteration = t;
    rec.seconds = clock.seconds();
    rec.objective = objective_l1(out.weights, data, h);
    if (cfg.evaluator && cfg.eval_every > 0 && (t % cfg.eval_every == 0 || t == cfg.iterations)) {
      std::tie(rec.macro_f1, rec.micro_f1) = cfg.evaluator(out.weights);
    }
    out.log.push_back(rec);
    clock.resume();
  }
  out.stats.final_versions.assign(K, cfg.iterations);
  return out;
}

}  // namespace dsmlr
