// OpenMP kernels against their serial references, and the three engines on a
// dense synthetic set.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "dsmlr/engine_async.hpp"
#include "dsmlr/engine_sync.hpp"
#include "dsmlr/kernels.hpp"
#include "dsmlr/serial.hpp"
#include "dsmlr/synthetic.hpp"

using namespace dsmlr;

namespace {

const SparseDataset& dense_set() {
  static const SparseDataset d = [] {
    SyntheticSpec spec;
    spec.n_rows = 4000;
    spec.n_features = 100;
    spec.n_classes = 64;
    spec.density = 1.0;
    spec.seed = 5;
    return make_synthetic(spec).data;
  }();
  return d;
}

const DenseWeights& weights() {
  static const DenseWeights W = [] {
    DenseWeights w(dense_set().n_classes, dense_set().n_features);
    for (std::size_t j = 0; j < w.flat().size(); ++j) w.flat()[j] = 1e-3 * double(j % 97) - 0.05;
    return w;
  }();
  return W;
}

void BM_RowLossesSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(kernels::serial::row_losses(weights(), dense_set()));
}
void BM_RowLossesOmp(benchmark::State& st) {
  omp_set_num_threads(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::row_losses(weights(), dense_set()));
}
void BM_GradientSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(kernels::serial::full_gradient(weights(), dense_set(), 1e-3));
}
void BM_GradientOmp(benchmark::State& st) {
  omp_set_num_threads(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::full_gradient(weights(), dense_set(), 1e-3));
}

EngineConfig engine(std::size_t P) {
  EngineConfig cfg;
  cfg.workers = P;
  cfg.iterations = 2;
  cfg.seed = 1;
  cfg.hyper.lambda = 1e-3;
  cfg.hyper.eta0 = 0.05;
  return cfg;
}

void BM_Serial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(run_serial_dsmlr(dense_set(), engine(1)));
}
void BM_Sync(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(run_sync(dense_set(), engine(static_cast<std::size_t>(st.range(0)))));
}
void BM_Async(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(run_async(dense_set(), engine(static_cast<std::size_t>(st.range(0)))));
}

}  // namespace

BENCHMARK(BM_RowLossesSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RowLossesOmp)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_GradientSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientOmp)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Sync)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Async)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
