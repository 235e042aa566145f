#include "dsmlr/kernels.hpp"

#include <cmath>
#include <cstdint>
#include <string>

#include "dsmlr/core_math.hpp"

namespace dsmlr::kernels {

namespace {

double row_loss(const DenseWeights& W, const SparseDataset& data, std::size_t i) {
  const SparseRow& x = data.rows[i];
  return log_partition(W, x) - sparse_dot(W.row(data.labels[i]), x);
}

// Gradient block for class k given the per-row log partitions.
void gradient_block(const DenseWeights& W, const SparseDataset& data, double lambda,
                    const std::vector<double>& lse, std::size_t k, DenseWeights& g) {
  auto gk = g.row(k);
  auto wk = W.row(k);
  const double inv_n = data.size() == 0 ? 0.0 : 1.0 / static_cast<double>(data.size());
  for (std::size_t j = 0; j < gk.size(); ++j) gk[j] = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const SparseRow& x = data.rows[i];
    const double p = std::exp(sparse_dot(wk, x) - lse[i]);
    const double coeff = (p - (data.labels[i] == k ? 1.0 : 0.0)) * inv_n;
    for (std::size_t j = 0; j < x.nnz(); ++j) gk[x.indices[j]] += coeff * x.values[j];
  }
  for (std::size_t j = 0; j < gk.size(); ++j) gk[j] += lambda * wk[j];
}

// Everything that can throw is checked here, before any parallel region.
void require_fit(const DenseWeights& W, const SparseDataset& data, bool needs_labels) {
  if (W.n_features() < data.n_features) {
    throw StructuralError("kernel: weights have D=" + std::to_string(W.n_features()) +
                          ", data needs D=" + std::to_string(data.n_features));
  }
  if (W.n_classes() == 0) throw StructuralError("kernel: no classes");
  if (needs_labels && data.n_classes > W.n_classes()) {
    throw StructuralError("kernel: data has more classes than weights");
  }
}

}  // namespace

std::vector<double> row_losses(const DenseWeights& W, const SparseDataset& data) {
  require_fit(W, data, true);
  const auto n = static_cast<std::int64_t>(data.size());
  std::vector<double> out(data.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = row_loss(W, data, static_cast<std::size_t>(i));
  return out;
}

std::vector<double> log_partitions(const DenseWeights& W, const SparseDataset& data) {
  require_fit(W, data, false);
  const auto n = static_cast<std::int64_t>(data.size());
  std::vector<double> out(data.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = log_partition(W, data.rows[i]);
  return out;
}

DenseWeights full_gradient(const DenseWeights& W, const SparseDataset& data, double lambda) {
  require_fit(W, data, true);
  const std::vector<double> lse = log_partitions(W, data);
  DenseWeights g(W.n_classes(), W.n_features());
  const auto K = static_cast<std::int64_t>(W.n_classes());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t k = 0; k < K; ++k) gradient_block(W, data, lambda, lse, static_cast<std::size_t>(k), g);
  return g;
}

std::vector<double> score_matrix(const DenseWeights& W, const SparseDataset& data) {
  require_fit(W, data, false);
  const std::size_t K = W.n_classes();
  const auto n = static_cast<std::int64_t>(data.size());
  std::vector<double> out(data.size() * K);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const SparseRow& x = data.rows[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < K; ++k) out[static_cast<std::size_t>(i) * K + k] = sparse_dot(W.row(k), x);
  }
  return out;
}

namespace serial {

std::vector<double> row_losses(const DenseWeights& W, const SparseDataset& data) {
  require_fit(W, data, true);
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = row_loss(W, data, i);
  return out;
}

std::vector<double> log_partitions(const DenseWeights& W, const SparseDataset& data) {
  require_fit(W, data, false);
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = log_partition(W, data.rows[i]);
  return out;
}

DenseWeights full_gradient(const DenseWeights& W, const SparseDataset& data, double lambda) {
  require_fit(W, data, true);
  const std::vector<double> lse = log_partitions(W, data);
  DenseWeights g(W.n_classes(), W.n_features());
  for (std::size_t k = 0; k < W.n_classes(); ++k) gradient_block(W, data, lambda, lse, k, g);
  return g;
}

std::vector<double> score_matrix(const DenseWeights& W, const SparseDataset& data) {
  require_fit(W, data, false);
  const std::size_t K = W.n_classes();
  std::vector<double> out(data.size() * K);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t k = 0; k < K; ++k) out[i * K + k] = sparse_dot(W.row(k), data.rows[i]);
  }
  return out;
}

}  // namespace serial

}  // namespace dsmlr::kernels
