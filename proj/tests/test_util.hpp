#pragma once

#include <random>

#include "dsmlr/types.hpp"

namespace dsmlr::testing {

inline SparseRow random_row(std::mt19937_64& gen, std::size_t D, double density = 0.6, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::bernoulli_distribution keep(density);
  SparseRow r;
  for (std::size_t j = 0; j < D; ++j) {
    if (!keep(gen)) continue;
    double v = u(gen);
    if (v == 0.0) v = 0.5;
    r.indices.push_back(static_cast<FeatureId>(j));
    r.values.push_back(v);
  }
  return r;
}

inline SparseDataset random_dataset(std::mt19937_64& gen, std::size_t N, std::size_t D, std::size_t K,
                                    double density = 0.6) {
  SparseDataset d;
  d.n_features = D;
  d.n_classes = K;
  std::uniform_int_distribution<std::size_t> lab(0, K - 1);
  for (std::size_t i = 0; i < N; ++i) {
    d.rows.push_back(random_row(gen, D, density));
    d.labels.push_back(static_cast<ClassId>(lab(gen)));
  }
  return d;
}

inline DenseWeights random_weights(std::mt19937_64& gen, std::size_t K, std::size_t D, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  DenseWeights W(K, D);
  for (double& v : W.flat()) v = g(gen);
  return W;
}

}  // namespace dsmlr::testing
