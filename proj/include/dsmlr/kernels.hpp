#pragma once

#include <vector>

#include "dsmlr/types.hpp"

// Data-parallel kernels over rows or classes. Each has a single-threaded
// reference in kernels::serial producing bit-identical results; reductions are
// done serially after the parallel map so the thread count never changes the
// rounding.
namespace dsmlr::kernels {

/// Per-row loss log_partition(W, x_i) - w_{y_i} . x_i.
std::vector<double> row_losses(const DenseWeights& W, const SparseDataset& data);

/// Per-row log_partition(W, x_i).
std::vector<double> log_partitions(const DenseWeights& W, const SparseDataset& data);

/// Gradient of the full regularized objective with respect to every w_k.
DenseWeights full_gradient(const DenseWeights& W, const SparseDataset& data, double lambda);

/// N x K matrix of scores w_k . x_i, row-major.
std::vector<double> score_matrix(const DenseWeights& W, const SparseDataset& data);

namespace serial {
std::vector<double> row_losses(const DenseWeights& W, const SparseDataset& data);
std::vector<double> log_partitions(const DenseWeights& W, const SparseDataset& data);
DenseWeights full_gradient(const DenseWeights& W, const SparseDataset& data, double lambda);
std::vector<double> score_matrix(const DenseWeights& W, const SparseDataset& data);
}  // namespace serial

}  // namespace dsmlr::kernels
