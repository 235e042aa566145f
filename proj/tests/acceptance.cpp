// Acceptance checks. Prints one PASS/FAIL line per criterion; exits nonzero
// if any gated criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>

#include "dsmlr/core_math.hpp"
#include "dsmlr/engine_async.hpp"
#include "dsmlr/engine_sync.hpp"
#include "dsmlr/metrics.hpp"
#include "dsmlr/serial.hpp"
#include "dsmlr/synthetic.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace dsmlr;
using dsmlr::testing::random_dataset;
using dsmlr::testing::random_row;
using dsmlr::testing::random_weights;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, double budget_s, bool gated, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs < budget_s;
  const bool pass = o.pass && in_time;
  if (gated && !pass) ++failures;
  std::printf("%s criterion %d (%s): %s; %.2f s of %.0f s%s\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
              secs, budget_s, gated ? "" : " [informational]");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// Shared training setup for the convergence criteria.
const SparseDataset& synthetic() {
  static const SparseDataset d = make_synthetic(SyntheticSpec{}).data;
  return d;
}

Hyperparams acceptance_hyper() {
  Hyperparams h;
  h.lambda = 1e-3;
  h.eta0 = 0.05;
  return h;
}

double optimum() {
  static const double v = [] {
    const OracleResult r = run_batch_oracle(synthetic(), acceptance_hyper(), OracleConfig{});
    if (!r.converged) throw std::runtime_error("oracle did not converge");
    return r.value;
  }();
  return v;
}

EngineConfig engine_config(std::size_t P, std::size_t T) {
  EngineConfig cfg;
  cfg.workers = P;
  cfg.iterations = T;
  cfg.seed = 3;
  cfg.hyper = acceptance_hyper();
  return cfg;
}

Outcome identity() {
  std::mt19937_64 gen(1001);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t N = 1 + gen() % 50, D = 1 + gen() % 10, K = 1 + gen() % 8;
    const SparseDataset d = random_dataset(gen, N, D, K);
    const DenseWeights W = random_weights(gen, K, D, 1.5);
    Hyperparams h;
    h.lambda = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
    std::vector<double> b(N);
    for (std::size_t i = 0; i < N; ++i) {
      double sum = 0.0;
      for (std::size_t k = 0; k < K; ++k) sum += std::exp(sparse_dot(W.row(k), d.rows[i]));
      b[i] = refresh_b(sum);
    }
    const double l1 = objective_l1(W, d, h);
    worst = std::max(worst, std::abs(objective_l2(W, b, d, h) - l1) / std::max(1.0, std::abs(l1)));
  }
  return {worst <= 1e-10, fmt("max relative difference %.3g over 100 instances", worst)};
}

Outcome gradient_check() {
  std::mt19937_64 gen(1002);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t D = 1 + gen() % 10, K = 1 + gen() % 8;
    DenseWeights W = random_weights(gen, K, D);
    const SparseRow x = random_row(gen, D, 0.8);
    const auto y = static_cast<ClassId>(gen() % K);
    const double lambda = std::uniform_real_distribution<double>(0.0, 0.5)(gen);
    const DenseWeights g = exact_gradient_fi(W, x, y, -log_partition(W, x), lambda);
    double err = 0.0, ref = 0.0;
    const double h = 1e-5;
    for (std::size_t j = 0; j < W.flat().size(); ++j) {
      const double orig = W.flat()[j];
      W.flat()[j] = orig + h;
      const double up = loss_fi(W, x, y, lambda);
      W.flat()[j] = orig - h;
      const double down = loss_fi(W, x, y, lambda);
      W.flat()[j] = orig;
      const double fd = (up - down) / (2 * h);
      err += (fd - g.flat()[j]) * (fd - g.flat()[j]);
      ref += fd * fd;
    }
    worst = std::max(worst, std::sqrt(err) / std::max(1e-3, std::sqrt(ref)));
  }
  return {worst <= 1e-6, fmt("max relative error %.3g over 50 instances", worst)};
}

Outcome oracle_convergence() {
  const double opt = optimum();
  std::string detail = fmt("optimum %.10f;", opt);
  bool ok = true;
  for (std::size_t P : {1u, 2u, 4u}) {
    const TrainResult r = run_async(synthetic(), engine_config(P, 200));
    const double rel = (r.log.back().objective - opt) / opt;
    ok = ok && std::abs(rel) <= 1e-3;
    detail += fmt(" P=%.0f rel gap %.3g", double(P), rel) + (P == 4 ? "" : ";");
  }
  return {ok, detail};
}

Outcome equivalence() {
  const EngineConfig cfg = engine_config(1, 30);
  const TrainResult s = run_serial_dsmlr(synthetic(), cfg);
  const TrainResult y = run_sync(synthetic(), cfg);
  const TrainResult a = run_async(synthetic(), cfg);
  std::size_t mismatches = 0;
  for (std::size_t t = 0; t < s.log.size(); ++t) {
    if (t >= y.log.size() || t >= a.log.size()) {
      ++mismatches;
      continue;
    }
    mismatches += s.log[t].objective != y.log[t].objective;
    mismatches += s.log[t].objective != a.log[t].objective;
  }
  const bool ok = mismatches == 0 && s.log.size() == 30 && y.log.size() == 30 && a.log.size() == 30;
  return {ok, fmt("%.0f mismatching objective values over 30 iterations", double(mismatches))};
}

Outcome rate() {
  const double opt = optimum();
  const TrainResult r = run_serial_dsmlr(synthetic(), engine_config(1, 200));
  double best50 = INFINITY, best200 = INFINITY;
  for (const auto& rec : r.log) {
    if (rec.iteration <= 50) best50 = std::min(best50, rec.objective);
    best200 = std::min(best200, rec.objective);
  }
  const double g50 = best50 - opt, g200 = best200 - opt;
  return {g50 > 0 && g200 <= 0.75 * g50, fmt("gap(50)=%.3g gap(200)=%.3g ratio %.3g", g50, g200, g200 / g50)};
}

Outcome shrinkage() {
  std::mt19937_64 gen(1006);
  const std::size_t K = 6, D = 8;
  const DenseWeights W = random_weights(gen, K, D);
  const DenseWeights U = random_weights(gen, K, D);
  const SparseRow x = random_row(gen, D, 0.9);
  auto scaled = [&](double delta) {
    DenseWeights now = W;
    for (std::size_t j = 0; j < now.flat().size(); ++j) now.flat()[j] += delta * U.flat()[j];
    return approx_gradient_error(now, W, x, 2) / delta;
  };
  const double c2 = scaled(1e-2), c3 = scaled(1e-3), c4 = scaled(1e-4);
  const double r1 = c3 / c2, r2 = c4 / c3;
  auto good = [](double r) { return r >= 0.5 && r <= 2.0 && std::abs(r - 1.0) <= 0.2; };
  return {good(r1) && good(r2), fmt("error/delta = %.4g, %.4g, %.4g", c2, c3, c4) + fmt("; ratios %.4f, %.4f", r1, r2)};
}

Outcome invariants() {
  const std::size_t P = 4, T = 50;
  EngineConfig cfg = engine_config(P, T);
  cfg.check_invariants = true;
  VisitRecorder rec;
  cfg.recorder = &rec;
  const TrainResult r = run_async(synthetic(), cfg);
  const std::size_t K = synthetic().n_classes;
  const std::size_t cap = (K + P - 1) / P + cfg.packet_size;
  bool ok = r.stats.conservation_checks == P * T + 1 && r.stats.max_resident_vectors <= cap;
  for (auto v : r.stats.final_versions) ok = ok && v == P * T;
  // Versions advance by exactly P per outer iteration.
  std::vector<std::vector<int>> per_iter(K, std::vector<int>(T + 1, 0));
  for (const ClassVisit& v : rec.take()) {
    ok = ok && v.version > (v.iteration - 1) * P && v.version <= v.iteration * P;
    ++per_iter[v.k][v.iteration];
  }
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t t = 1; t <= T; ++t) ok = ok && per_iter[k][t] == int(P);
  }
  return {ok, fmt("%.0f token audits, max resident %.0f (cap %.0f)", double(r.stats.conservation_checks),
                  double(r.stats.max_resident_vectors), double(cap))};
}

Outcome metrics_oracle() {
  std::mt19937_64 gen(1008);
  std::size_t bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t K = 1 + gen() % 6, N = 1 + gen() % 50;
    std::vector<std::vector<double>> rows(N, std::vector<double>(K));
    std::vector<double> flat;
    std::vector<ClassId> y(N), p(N);
    std::normal_distribution<double> g;
    for (std::size_t i = 0; i < N; ++i) {
      for (double& v : rows[i]) v = std::round(g(gen) * 2.0) / 2.0;
      flat.insert(flat.end(), rows[i].begin(), rows[i].end());
      y[i] = ClassId(gen() % K);
      p[i] = argmax(rows[i]);
    }
    bad += std::abs(micro_f1(p, y, K) - oracle::accuracy(p, y)) > 1e-12;
    bad += std::abs(macro_f1(p, y, K) - oracle::macro_f1(p, y, K)) > 1e-12;
    bad += rank_cdf(flat, y, K).cdf != oracle::rank_cdf(rows, y, K);
  }
  return {bad == 0, fmt("%.0f mismatches over 100 random prediction sets", double(bad))};
}

Outcome throughput() {
  SyntheticSpec spec;
  spec.n_rows = 2000;
  spec.n_features = 200;
  spec.n_classes = 40;
  spec.density = 1.0;
  spec.seed = 9;
  const SparseDataset d = make_synthetic(spec).data;
  auto per_iter = [&](std::size_t P) {
    EngineConfig cfg = engine_config(P, 5);
    const auto t0 = std::chrono::steady_clock::now();
    run_async(d, cfg);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 5.0;
  };
  const double t1 = per_iter(1), t4 = per_iter(4);
  return {t4 < t1, fmt("seconds/iteration P=1 %.4f, P=4 %.4f, hardware threads %.0f", t1, t4,
                       double(std::thread::hardware_concurrency()))};
}

}  // namespace

int main() {
  report(1, "L1/L2 identity", 1, true, identity);
  report(2, "gradient check", 5, true, gradient_check);
  report(3, "oracle convergence", 60, true, oracle_convergence);
  report(4, "cross-engine equivalence at P=1", 10, true, equivalence);
  report(5, "rate behavior", 30, true, rate);
  report(6, "staleness shrinkage", 5, true, shrinkage);
  report(7, "conservation and storage invariants", 30, true, invariants);
  report(8, "metrics oracle", 5, true, metrics_oracle);
  report(9, "throughput smoke", 120, false, throughput);
  std::printf("%d gated criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
