#include <cmath>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "dsmlr/core_math.hpp"
#include "dsmlr/engine_sync.hpp"
#include "dsmlr/serial.hpp"
#include "dsmlr/synthetic.hpp"
#include "test_util.hpp"

using namespace dsmlr;

namespace {

std::vector<WeightBlock> labelled_blocks(std::size_t P) {
  std::vector<WeightBlock> held(P);
  for (std::size_t p = 0; p < P; ++p) {
    held[p].classes = {ClassId(p)};
    held[p].n_features = 1;
    held[p].data = {double(p)};
  }
  return held;
}

EngineConfig small_config(std::size_t P, std::size_t T) {
  EngineConfig cfg;
  cfg.workers = P;
  cfg.iterations = T;
  cfg.seed = 11;
  cfg.hyper.lambda = 1e-2;
  cfg.hyper.eta0 = 0.05;
  return cfg;
}

SparseDataset small_data() {
  SyntheticSpec spec;
  spec.n_rows = 60;
  spec.n_features = 8;
  spec.n_classes = 7;
  spec.seed = 5;
  return make_synthetic(spec).data;
}

std::vector<double> objectives(const TrainResult& r) {
  std::vector<double> v;
  for (const auto& rec : r.log) v.push_back(rec.objective);
  return v;
}

}  // namespace

TEST_CASE("ring_shift moves blocks one step and back after P shifts") {
  auto held = labelled_blocks(3);
  const double* buffer0 = held[0].data.data();
  ring_shift(held);
  CHECK(held[1].classes == std::vector<ClassId>{0});
  CHECK(held[2].classes == std::vector<ClassId>{1});
  CHECK(held[0].classes == std::vector<ClassId>{2});
  CHECK(held[1].data.data() == buffer0);  // moved, not copied

  ring_shift(held);
  ring_shift(held);
  for (std::size_t p = 0; p < 3; ++p) CHECK(held[p].classes == std::vector<ClassId>{ClassId(p)});

  auto one = labelled_blocks(1);
  ring_shift(one);
  CHECK(one[0].classes == std::vector<ClassId>{0});

  for (std::size_t P = 1; P <= 6; ++P) {
    auto ring = labelled_blocks(P);
    std::vector<std::set<ClassId>> seen(P);
    for (std::size_t s = 0; s < P; ++s) {
      for (std::size_t p = 0; p < P; ++p) seen[p].insert(ring[p].classes[0]);
      ring_shift(ring);
    }
    for (std::size_t p = 0; p < P; ++p) CHECK(seen[p].size() == P);
  }
}

TEST_CASE("sync with P=1 matches the serial engine exactly") {
  const SparseDataset d = small_data();
  const EngineConfig cfg = small_config(1, 6);
  const TrainResult s = run_serial_dsmlr(d, cfg);
  const TrainResult r = run_sync(d, cfg);
  CHECK(objectives(s) == objectives(r));
  CHECK(s.weights == r.weights);
  CHECK(s.b == r.b);
}

TEST_CASE("eta0 = 0 keeps W at zero and the objective at log K") {
  const SparseDataset d = small_data();
  EngineConfig cfg = small_config(3, 3);
  cfg.hyper.eta0 = 0.0;
  const TrainResult r = run_sync(d, cfg);
  for (const auto& rec : r.log) CHECK(rec.objective == doctest::Approx(std::log(7.0)).epsilon(1e-14));
  for (double v : r.weights.flat()) CHECK(v == 0.0);
}

TEST_CASE("b equals the exact refresh of the final weights") {
  const SparseDataset d = small_data();
  for (std::size_t P : {1u, 2u, 3u, 7u}) {
    VisitRecorder rec;
    EngineConfig cfg = small_config(P, 4);
    cfg.recorder = &rec;
    const TrainResult r = run_sync(d, cfg);
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(std::abs(r.b[i] + log_partition(r.weights, d.rows[i])) <= 1e-12);
    }
    // Replay: every worker folds every class of iteration t into its partial sums.
    const RowPartition rows = partition_rows(d.size(), P);
    std::map<std::pair<std::size_t, std::size_t>, std::set<ClassId>> seen;
    for (const ClassVisit& v : rec.take()) {
      CHECK(seen[{v.worker, v.iteration}].insert(v.k).second);
      CHECK(v.version == v.iteration * P);
      if (v.iteration == 4) {
        const auto expect = r.weights.row(v.k);
        CHECK(std::equal(v.w.begin(), v.w.end(), expect.begin(), expect.end()));
      }
    }
    CHECK(seen.size() == P * 4);
    for (const auto& [key, classes] : seen) CHECK(classes.size() == 7);
  }
}

TEST_CASE("sync runs are deterministic and P changes only the row order") {
  const SparseDataset d = small_data();
  for (std::size_t P : {2u, 4u}) {
    EngineConfig cfg = small_config(P, 5);
    cfg.check_invariants = true;
    const TrainResult a = run_sync(d, cfg);
    const TrainResult b = run_sync(d, cfg);
    CHECK(objectives(a) == objectives(b));
    CHECK(a.weights == b.weights);
    CHECK(a.stats.max_resident_vectors <= (7 + P - 1) / P);
    for (auto v : a.stats.final_versions) CHECK(v == 5 * P);
    for (std::size_t t = 1; t < a.log.size(); ++t) CHECK(a.log[t].seconds >= a.log[t - 1].seconds);
  }
}

TEST_CASE("sync objective decreases from log K on separable-ish data") {
  const SparseDataset d = small_data();
  const TrainResult r = run_sync(d, small_config(2, 20));
  CHECK(r.log.front().objective < std::log(7.0));
  CHECK(r.log.back().objective < r.log.front().objective);
}

TEST_CASE("sync rejects bad configurations") {
  const SparseDataset d = small_data();
  CHECK_THROWS_AS(run_sync(d, small_config(8, 1)), StructuralError);  // P > K
  CHECK_THROWS_AS(run_sync(d, small_config(0, 1)), StructuralError);
  CHECK_THROWS_AS(run_sync(d, small_config(1, 0)), StructuralError);
}

TEST_CASE("sync reports overflow with context") {
  SparseDataset d;
  d.n_features = 1;
  d.n_classes = 2;
  d.rows = {SparseRow{{0}, {1.0}}, SparseRow{{0}, {-1.0}}};
  d.labels = {0, 1};
  EngineConfig cfg = small_config(1, 3);
  cfg.hyper.eta0 = 1e6;
  try {
    run_sync(d, cfg);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("sync iteration") != std::string::npos);
  }
}

TEST_CASE("evaluator is called on the schedule") {
  const SparseDataset d = small_data();
  EngineConfig cfg = small_config(2, 5);
  cfg.eval_every = 2;
  int calls = 0;
  cfg.evaluator = [&](const DenseWeights& W) {
    ++calls;
    const Evaluation e = evaluate(W, d);
    return std::pair{e.macro, e.micro};
  };
  const TrainResult r = run_sync(d, cfg);
  CHECK(calls == 3);  // t = 2, 4, 5
  CHECK(std::isnan(r.log[0].macro_f1));
  CHECK(!std::isnan(r.log[1].macro_f1));
  CHECK(!std::isnan(r.log[4].micro_f1));
}
