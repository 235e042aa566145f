#pragma once

#include <cstddef>
#include <optional>

#include "dsmlr/engine.hpp"
#include "dsmlr/types.hpp"

namespace dsmlr {

struct OracleConfig {
  double tolerance = 1e-7;  // on the Euclidean norm of the full gradient
  std::size_t max_iterations = 200000;
  double initial_step = 1.0;
  double shrink = 0.5;       // backtracking factor, in (0, 1)
  double armijo = 1e-4;      // sufficient-decrease constant
  void validate() const;
};

struct OracleResult {
  DenseWeights weights;
  double value = 0.0;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Full-batch gradient descent with Armijo backtracking on the regularized
/// objective. Requires lambda > 0. Starts from `init` when given, else zero.
OracleResult run_batch_oracle(const SparseDataset& data, const Hyperparams& h, const OracleConfig& cfg,
                              const std::optional<DenseWeights>& init = std::nullopt);

/// Single-threaded doubly-separable SGD: per outer iteration, one shuffled
/// pass over all rows for each class in id order, then an exact refresh of
/// every b_i. Same pass discipline as the ring engine with one worker.
TrainResult run_serial_dsmlr(const SparseDataset& data, const EngineConfig& cfg);

}  // namespace dsmlr
