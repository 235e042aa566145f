#include "dsmlr/engine.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "dsmlr/rng.hpp"

namespace dsmlr {

void VisitRecorder::record(ClassVisit v) {
  std::lock_guard lock(mu_);
  visits_.push_back(std::move(v));
}

std::vector<ClassVisit> VisitRecorder::take() {
  std::lock_guard lock(mu_);
  return std::exchange(visits_, {});
}

std::vector<std::size_t> shuffled_rows(RowRange rows, std::uint64_t seed, std::size_t worker,
                                       std::size_t iteration, ClassId k) {
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), rows.begin);
  std::mt19937_64 gen(derive_seed(seed, {worker, iteration, k}));
  std::shuffle(order.begin(), order.end(), gen);
  return order;
}

void validate_engine_input(const SparseDataset& data, const EngineConfig& cfg) {
  data.validate();
  cfg.hyper.validate();
  if (cfg.workers == 0) throw StructuralError("need at least one worker");
  if (cfg.iterations == 0) throw StructuralError("need at least one outer iteration");
  if (cfg.workers > data.size() || cfg.workers > data.n_classes) {
    throw StructuralError("worker count " + std::to_string(cfg.workers) + " exceeds min(N=" +
                          std::to_string(data.size()) + ", K=" + std::to_string(data.n_classes) + ")");
  }
  if (cfg.packet_size == 0) throw StructuralError("packet size must be >= 1");
}

double Stopwatch::seconds() const {
  const auto now = paused_ ? paused_at_ : clock::now();
  return std::chrono::duration<double>(now - start_ - paused_total_).count();
}

void Stopwatch::pause() {
  if (paused_) return;
  paused_ = true;
  paused_at_ = clock::now();
}

void Stopwatch::resume() {
  if (!paused_) return;
  paused_ = false;
  paused_total_ += clock::now() - paused_at_;
}

}  // namespace dsmlr
