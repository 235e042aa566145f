#pragma once

#include <vector>

#include "dsmlr/engine.hpp"

namespace dsmlr {

/// A contiguous buffer of class vectors owned by one worker at a time.
struct WeightBlock {
  std::vector<ClassId> classes;
  std::vector<double> data;  // classes.size() x D, row-major
  std::size_t n_features = 0;

  std::size_t size() const { return classes.size(); }
  std::span<double> row(std::size_t j) { return {data.data() + j * n_features, n_features}; }
  std::span<const double> row(std::size_t j) const { return {data.data() + j * n_features, n_features}; }
};

/// Moves the block held by worker p to worker (p + 1) mod P. Buffers are
/// moved, never copied.
void ring_shift(std::vector<WeightBlock>& held);

/// Synchronous ring: per outer iteration, P stochastic inner epochs with the
/// blocks rotating around the ring, P accumulation inner epochs computing the
/// partial sums, then an exact refresh of every b_i.
TrainResult run_sync(const SparseDataset& data, const EngineConfig& cfg);

}  // namespace dsmlr
