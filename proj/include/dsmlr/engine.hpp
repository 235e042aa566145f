#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <utility>
#include <vector>

#include "dsmlr/data_io.hpp"
#include "dsmlr/metrics.hpp"
#include "dsmlr/types.hpp"

namespace dsmlr {

/// Returns (macro F1, micro F1) for a full weight snapshot.
using Evaluator = std::function<std::pair<double, double>(const DenseWeights&)>;

/// One processing of class k by a worker, recorded after the stochastic pass.
/// `version` counts passes applied to w_k so far, including this one.
struct ClassVisit {
  std::size_t worker = 0;
  std::size_t iteration = 0;  // 1-based outer iteration
  ClassId k = 0;
  std::uint64_t version = 0;
  std::vector<double> w;  // w_k as used for this worker's partial sums
};

/// Thread-safe sink for ClassVisit events, used by replay tests.
class VisitRecorder {
 public:
  void record(ClassVisit v);
  std::vector<ClassVisit> take();

 private:
  std::mutex mu_;
  std::vector<ClassVisit> visits_;
};

struct EngineConfig {
  std::size_t workers = 1;
  std::size_t iterations = 1;
  std::uint64_t seed = 0;
  Hyperparams hyper;
  /// Evaluate F1 every this many iterations (and at the last one); 0 = never.
  std::size_t eval_every = 0;
  Evaluator evaluator;
  /// Verifies ownership, conservation and storage invariants while running;
  /// a violation throws IntegrityError.
  bool check_invariants = false;
  /// Asynchronous engine only: classes per migrating packet.
  std::size_t packet_size = 1;
  VisitRecorder* recorder = nullptr;
};

struct EngineStats {
  /// Largest number of class vectors a worker held at once, excluding vectors
  /// queued in its inbox.
  std::size_t max_resident_vectors = 0;
  /// Largest inbox length observed (asynchronous engine).
  std::size_t max_queue_depth = 0;
  /// Number of successful global token-count audits.
  std::size_t conservation_checks = 0;
  std::size_t token_processings = 0;
  /// Per-class pass count at the end of the run.
  std::vector<std::uint64_t> final_versions;
};

struct TrainResult {
  DenseWeights weights;
  ProgressLog log;
  /// Final variational values, indexed by global row.
  std::vector<double> b;
  EngineStats stats;
};

/// Local row order for one stochastic pass, determined only by
/// (seed, worker, iteration, class) so that it does not depend on scheduling.
std::vector<std::size_t> shuffled_rows(RowRange rows, std::uint64_t seed, std::size_t worker,
                                       std::size_t iteration, ClassId k);

/// Shared argument checks for the engines: P <= min(N, K), T >= 1.
void validate_engine_input(const SparseDataset& data, const EngineConfig& cfg);

/// Wall-clock that can be paused while logging or evaluating.
class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const;
  void pause();
  void resume();

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point start_;
  clock::time_point paused_at_{};
  clock::duration paused_total_{};
  bool paused_ = false;
};

}  // namespace dsmlr
