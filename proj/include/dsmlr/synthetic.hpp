#pragma once

#include <cstdint>

#include "dsmlr/data_io.hpp"

namespace dsmlr {

struct SyntheticSpec {
  std::size_t n_rows = 200;
  std::size_t n_features = 20;
  std::size_t n_classes = 10;
  std::uint64_t seed = 7;
  /// Probability that a coordinate is stored; 1 gives fully dense rows.
  double density = 0.5;
  /// Standard deviation of the per-row noise around its class centroid.
  double noise = 0.6;
};

/// Gaussian class clusters, randomly sparsified, each row scaled to unit
/// norm. Labels are named "0".."K-1" and every class appears at least once.
ParsedDataset make_synthetic(const SyntheticSpec& spec);

}  // namespace dsmlr
